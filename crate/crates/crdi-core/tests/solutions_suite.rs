//! The radial constraint ODEs, the preset field strengths and normalization.

use crdi_core::inversion::{DerivMode, PhysConsts};
use crdi_core::solutions::{
    fields_from_potential, hydrogen_profiles, riccati_z_to_x, x_to_riccati_z, Family, FamilySpec,
    HydrogenProfileSpec, SolutionConfig,
};
use crdi_core::verify::normalize;
use crdi_core::{Chart, ChartPoint, Error};
use std::sync::Arc;

const ALPHA: f64 = 1.0 / 137.035999;

fn cfg(family: FamilySpec) -> SolutionConfig {
    SolutionConfig {
        family,
        constants: PhysConsts::default(),
        kappa: 1.0,
    }
}

fn sph(x: [f64; 4]) -> ChartPoint {
    Chart::spherical().point(x).unwrap()
}

#[test]
fn riccati_map_roundtrips() {
    for x in [-3.0, -0.4, 0.1, 1.0, 137.0] {
        let z = x_to_riccati_z(x);
        assert!(z.abs() < 1.0, "map must land inside the artanh domain");
        assert!((riccati_z_to_x(z) - x).abs() < 1e-12 * (1.0 + x.abs()));
        // the defining identity X = -csch(2 artanh Z)
        let csch = 1.0 / (2.0 * z.atanh()).sinh();
        assert!((x + csch).abs() < 1e-10 * (1.0 + x.abs()));
    }
}

#[test]
fn coulomb_constant_x_is_a_fixed_point() {
    let consts = PhysConsts::default();
    let za = ALPHA;
    let x0 = (1.0 - za * za).sqrt() / za;
    let eps = (1.0 - za * za).sqrt();
    let v = move |r: f64| za / r;
    let prof = hydrogen_profiles(v, eps, &consts, 0.1, x0, 0.0, [0.1, 50.0]).unwrap();
    for k in 0..=100 {
        let r = 0.1 + 49.9 * k as f64 / 100.0;
        assert!(
            (prof.x(r) - x0).abs() < 1e-8,
            "X({r}) drifted by {}",
            (prof.x(r) - x0).abs()
        );
        // G(r) - (2 mc Z alpha r/hbar - 2 sqrt(1-(Z alpha)^2) ln r) constant
        let g_expect = 2.0 * za * r - 2.0 * (1.0 - za * za).sqrt() * r.ln();
        let g_offset = prof.g(0.1) - (2.0 * za * 0.1 - 2.0 * (1.0 - za * za).sqrt() * 0.1f64.ln());
        assert!(
            (prof.g(r) - g_expect - g_offset).abs() < 1e-7,
            "G({r}) off by {}",
            (prof.g(r) - g_expect - g_offset).abs()
        );
        // Riccati route agrees through the map
        assert!((riccati_z_to_x(prof.z_riccati(r)) - x0).abs() < 1e-8);
    }
}

#[test]
fn ode_profile_hydrogen_still_inverts_to_coulomb() {
    // a non-fixed-point start: X(r) varies, yet the inverted potential stays
    // the pure Coulomb A_t = -Z alpha / r by construction of the constraints
    let za = 0.2; // strong coupling so X actually moves
    let x0_fp = (1.0f64 - za * za).sqrt() / za;
    let fam = Family::build(&cfg(FamilySpec::Hydrogen {
        z: 1.0,
        alpha: za,
        eps: None,
        profile: HydrogenProfileSpec::Ode {
            x0: x0_fp * 1.05,
            g0: 0.0,
            r0: 1.0,
            r_span: [0.7, 5.0],
        },
    }))
    .unwrap();
    let h = fam.hydrogen_field().unwrap();
    // X really varies along r (off-fixed-point trajectories are repelled
    // backward in r)
    assert!((h.profiles.x(0.8) - h.profiles.x(4.0)).abs() > 1e-2);
    for p in [
        sph([0.0, 0.8, 0.9, 0.3]),
        sph([0.2, 2.5, 1.9, 4.0]),
        sph([0.0, 4.8, 0.5, 2.0]),
    ] {
        let inv = fam.invert(&p, DerivMode::Analytic).unwrap();
        assert!(
            (inv.a_coord[0] + za / p.x[1]).abs() < 1e-7,
            "A_t = {} vs {}",
            inv.a_coord[0],
            -za / p.x[1]
        );
        for k in 1..4 {
            assert!(inv.a_coord[k].abs() < 1e-7);
        }
    }
}

#[test]
fn riccati_pole_crossing_is_diagnosed() {
    // X crossing zero sends Z to the artanh boundary; force it with a huge
    // repulsive potential and an X0 near zero
    let consts = PhysConsts::default();
    let v = |r: f64| -40.0 / r.sqrt();
    let out = hydrogen_profiles(v, 0.97, &consts, 0.5, 0.05, 0.0, [0.5, 60.0]);
    match out {
        Err(Error::PoleCrossing { r, z }) => {
            assert!(r > 0.5 && z.abs() >= 1e8, "diagnostic carries r = {r}, Z = {z}");
        }
        Err(other) => panic!("expected a pole diagnostic, got {other}"),
        Ok(_) => panic!("expected the Riccati route to hit a pole"),
    }
}

#[test]
fn uniform_b_preset_fields() {
    let i_loop = 0.8;
    let mu0 = 1.3;
    let r_loop = 2.0;
    let fam = Arc::new(
        Family::build(&cfg(FamilySpec::ZeroBetaUniformB { i_loop, mu0, r_loop })).unwrap(),
    );
    let a_field = fam.potential(DerivMode::Analytic);
    let b0 = i_loop * mu0 / (2.0 * r_loop);
    let mut bz_min = f64::INFINITY;
    let mut bz_max = f64::NEG_INFINITY;
    for p in [
        sph([0.0, 0.7, 0.9, 0.4]),
        sph([0.0, 1.8, 1.4, 2.8]),
        sph([0.0, 3.0, 2.3, 5.3]),
        sph([0.0, 1.1, 0.5, 1.0]),
    ] {
        let fs = fields_from_potential(&a_field, &p).unwrap();
        let (st, ct) = p.x[2].sin_cos();
        let bz = fs.b[0] * ct - fs.b[1] * st;
        bz_min = bz_min.min(bz);
        bz_max = bz_max.max(bz);
        assert!((bz - b0).abs() < 1e-8, "B_z = {bz} vs {b0} at {:?}", p.x);
        // A_t = 0 for this preset: no electric field
        for comp in fs.e {
            assert!(comp.abs() < 1e-8);
        }
    }
    assert!(bz_max - bz_min < 1e-8, "B_z spread {}", bz_max - bz_min);
}

#[test]
fn coulomb_solenoid_preset_fields() {
    let (a, alpha_c) = (0.6, 0.3);
    let (i_loop, mu0, r_loop) = (1.0, 1.0, 1.0);
    let fam = Arc::new(
        Family::build(&cfg(FamilySpec::ZeroBetaCoulombSolenoid {
            a,
            alpha_c,
            i_loop,
            mu0,
            r_loop,
        }))
        .unwrap(),
    );
    let sq = (1.0f64 - a * a).sqrt();
    let a_field = fam.potential(DerivMode::Analytic);
    for p in [
        sph([0.0, 0.9, 1.0, 0.7]),
        sph([0.0, 1.6, 1.9, 3.9]),
        sph([0.0, 2.4, 0.7, 2.2]),
    ] {
        let (r, th) = (p.x[1], p.x[2]);
        let (st, ct) = th.sin_cos();
        // A_t = -alpha_c hbar / r for the preset energy choice
        let a_mu = a_field.a_coord(&p).unwrap();
        assert!(
            (a_mu[0] + alpha_c / r).abs() < 1e-9,
            "A_t = {} at {:?}",
            a_mu[0],
            p.x
        );
        let fs = fields_from_potential(&a_field, &p).unwrap();
        let b_r = i_loop * mu0 * ct / (2.0 * r_loop) - 2.0 * alpha_c * ct / (sq * r);
        let b_th = alpha_c * st / (sq * r) - i_loop * mu0 * st / (2.0 * r_loop);
        assert!((fs.b[0] - b_r).abs() < 1e-6, "B_r = {} vs {b_r}", fs.b[0]);
        assert!((fs.b[1] - b_th).abs() < 1e-6, "B_th = {} vs {b_th}", fs.b[1]);
        assert!(fs.b[2].abs() < 1e-6);
        let j_phi = -2.0 * alpha_c * st / (sq * r * r);
        assert!(
            (fs.j[2] - j_phi).abs() < 1e-6,
            "J_phi = {} vs {j_phi} at {:?}",
            fs.j[2],
            p.x
        );
    }
}

#[test]
fn zero_potential_gives_zero_fields() {
    let a_field = crdi_core::PotentialField::new(Chart::spherical(), |_p| Ok([0.0; 4]));
    let fs = fields_from_potential(&a_field, &sph([0.0, 1.0, 1.0, 1.0])).unwrap();
    for v in fs.e.iter().chain(fs.b.iter()).chain(fs.j.iter()) {
        assert!(v.abs() < 1e-14);
    }
}

#[test]
fn presets_satisfy_dirac_equation() {
    let consts = PhysConsts::default();
    for spec in [
        FamilySpec::ZeroBetaUniformB {
            i_loop: 0.8,
            mu0: 1.3,
            r_loop: 2.0,
        },
        FamilySpec::ZeroBetaCoulombSolenoid {
            a: 0.6,
            alpha_c: 0.3,
            i_loop: 1.0,
            mu0: 1.0,
            r_loop: 1.0,
        },
    ] {
        let fam = Family::build(&cfg(spec)).unwrap();
        let field = fam.spinor();
        let geom = fam.geometry();
        for p in [sph([0.1, 0.9, 0.8, 0.5]), sph([0.0, 2.2, 2.0, 3.1])] {
            let inv = fam.invert(&p, DerivMode::Analytic).unwrap();
            let a_mu = inv.a_coord;
            let a_field = crdi_core::PotentialField::new(Chart::spherical(), move |_q| Ok(a_mu));
            let res = crdi_core::verify::dirac_residual(
                field.as_ref(),
                &a_field,
                &geom,
                &consts,
                &p,
                DerivMode::Analytic,
            )
            .unwrap();
            assert!(res < 1e-10, "residual {res} at {:?}", p.x);
            let res_fd = crdi_core::verify::dirac_residual(
                field.as_ref(),
                &a_field,
                &geom,
                &consts,
                &p,
                DerivMode::Fd,
            )
            .unwrap();
            assert!(res_fd < 1e-6, "FD residual {res_fd} at {:?}", p.x);
        }
    }
}

#[test]
fn hydrogen_normalization_matches_gamma_function_oracle() {
    // density rho v^0 = kappa^2 e^{-G} sqrt(1+X^2)/r^2 with
    // e^{-G} = r^{2 gamma} e^{-2 Z alpha r}, gamma = sqrt(1-(Z alpha)^2):
    // integral = kappa^2 4 pi sqrt(1+X^2) Gamma(2 gamma + 1)/(2 Z alpha)^(2 gamma + 1)
    let fam = Family::build(&cfg(FamilySpec::Hydrogen {
        z: 1.0,
        alpha: ALPHA,
        eps: None,
        profile: HydrogenProfileSpec::Constant,
        chart: None,
    }))
    .unwrap();
    let kappa = normalize(&fam, 1e-8).unwrap();
    let gamma_exp = (1.0 - ALPHA * ALPHA).sqrt();
    let x0 = gamma_exp / ALPHA;
    let integral_unit = 4.0
        * std::f64::consts::PI
        * (1.0 + x0 * x0).sqrt()
        * statrs::function::gamma::gamma(2.0 * gamma_exp + 1.0)
        / (2.0 * ALPHA).powf(2.0 * gamma_exp + 1.0);
    let expect = 1.0 / integral_unit.sqrt();
    assert!(
        (kappa - expect).abs() < 1e-6 * expect,
        "kappa = {kappa} vs {expect}"
    );

    // idempotency: normalizing the normalized solution leaves kappa fixed
    let fam2 = Family::build(&SolutionConfig {
        family: FamilySpec::Hydrogen {
            z: 1.0,
            alpha: ALPHA,
            eps: None,
            profile: HydrogenProfileSpec::Constant,
        chart: None,
    },
        constants: PhysConsts::default(),
        kappa,
    })
    .unwrap();
    let kappa2 = normalize(&fam2, 1e-8).unwrap();
    assert!((kappa2 - kappa).abs() < 1e-10 * kappa);
}

#[test]
fn normalization_scaling_property() {
    // multiplying rho by 4 (kappa by 2) divides kappa^2 by 4: the normalized
    // kappa is invariant under the input scale, i.e. normalize(c * solution)
    // returns the same physical normalization
    let base = Family::build(&cfg(FamilySpec::Hydrogen {
        z: 1.0,
        alpha: ALPHA,
        eps: None,
        profile: HydrogenProfileSpec::Constant,
        chart: None,
    }))
    .unwrap();
    let k1 = normalize(&base, 1e-8).unwrap();
    let scaled = Family::build(&SolutionConfig {
        family: FamilySpec::Hydrogen {
            z: 1.0,
            alpha: ALPHA,
            eps: None,
            profile: HydrogenProfileSpec::Constant,
        chart: None,
    },
        constants: PhysConsts::default(),
        kappa: 2.0,
    })
    .unwrap();
    // the input kappa scales rho by 4, the norm integral by 4, and the
    // returned kappa = kappa_in / sqrt(I(kappa_in)) = kappa_in/(kappa_in sqrt(I_1))
    let k2 = normalize(&scaled, 1e-8).unwrap();
    assert!((k2 - k1).abs() < 1e-9 * k1.abs());
}

#[test]
fn zero_beta_without_confinement_is_not_normalizable() {
    // G with no linear confining term: e^{-G} = r^{-g_log} decays only
    // polynomially, rho v^0 ~ r^{-2}; the radial integral diverges
    let fam = Family::build(&cfg(FamilySpec::ZeroBeta {
        a: 0.6,
        eps: 0.9,
        g_lin: 0.0,
        g_log: 0.3,
    }))
    .unwrap();
    match normalize(&fam, 1e-8) {
        Err(Error::NotNormalizable { .. }) => {}
        other => panic!("expected NotNormalizable, got {other:?}"),
    }
}

#[test]
fn zero_beta_with_confinement_normalizes() {
    let fam = Family::build(&cfg(FamilySpec::ZeroBeta {
        a: 0.6,
        eps: 0.9,
        g_lin: 1.6,
        g_log: 0.3,
    }))
    .unwrap();
    let kappa = normalize(&fam, 1e-8).unwrap();
    assert!(kappa.is_finite() && kappa > 0.0);
    // analytic check: rho v^0 sqrt(g) = kappa'^2 e^{-G}/a with
    // kappa'^2 = kappa^2 sqrt(1-a^2) a /(2 a)... integrate directly:
    // I = (2 pi) * pi * kappa^2 sqrt(1-a^2)/(2) * (1/a) * int e^-G dr
    let (a, g_lin, g_log): (f64, f64, f64) = (0.6, 1.6, 0.3);
    // exact radial integral: int r^(-g_log) e^(-g_lin r) dr = Gamma(1-g_log) g_lin^(g_log-1)
    let int_r = statrs::function::gamma::gamma(1.0 - g_log) * g_lin.powf(g_log - 1.0);
    let i_unit = 2.0 * std::f64::consts::PI
        * std::f64::consts::PI
        * (1.0 - a * a).sqrt()
        / (2.0 * a)
        * int_r;
    let expect = 1.0 / i_unit.sqrt();
    assert!(
        (kappa - expect).abs() < 1e-4 * expect,
        "kappa = {kappa} vs {expect}"
    );
}

#[test]
fn planar_solution_verifies_but_does_not_normalize() {
    let fam = Family::build(&cfg(FamilySpec::Planar2d {
        a: 0.8,
        g_lin: 1.0,
        g_log: 0.0,
    }))
    .unwrap();
    let p = Chart::cartesian().point([0.1, 0.8, 0.5, 0.4]).unwrap();
    let inv = fam.invert(&p, DerivMode::Analytic).unwrap();
    assert!(inv.cross_path < 1e-8);
    // purity holds: the planar family is a genuine solution
    let field = fam.spinor();
    let a_mu = inv.a_coord;
    let a_field = crdi_core::PotentialField::new(Chart::cartesian(), move |_q| Ok(a_mu));
    let res = crdi_core::verify::dirac_residual(
        field.as_ref(),
        &a_field,
        &crdi_core::FrameGeometry::holonomic(),
        &PhysConsts::default(),
        &p,
        DerivMode::Analytic,
    )
    .unwrap();
    assert!(res < 1e-10, "planar residual {res}");
    // infinite extent along z: not normalizable on the spherical chart
    assert!(normalize(&fam, 1e-8).is_err());
}
