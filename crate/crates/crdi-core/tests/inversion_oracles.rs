//! The inversion against every closed-form potential the solution families
//! admit, plus the R-tensor component oracles, purity, continuity and the
//! geometrical identities.

use crdi_core::clifford::ETA;
use crdi_core::geometry::SpinConnection;
use crdi_core::inversion::{
    constraint_residuals, geosvid_residual, invert_cartesian, invert_covariant,
    macroscopic_momentum, r_tensor, spin_continuity_terms, DerivMode, FrameGeometry, PhysConsts,
    PolarJet,
};
use crdi_core::solutions::{Family, FamilySpec, HydrogenProfileSpec, SolutionConfig};
use crdi_core::{Chart, ChartPoint, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const ALPHA: f64 = 1.0 / 137.035999;

fn cfg(family: FamilySpec) -> SolutionConfig {
    SolutionConfig {
        family,
        constants: PhysConsts::default(),
        kappa: 1.0,
    }
}

fn hydrogen() -> Family {
    Family::build(&cfg(FamilySpec::Hydrogen {
        z: 1.0,
        alpha: ALPHA,
        eps: None,
        profile: HydrogenProfileSpec::Constant,
        chart: None,
    }))
    .unwrap()
}

fn zero_beta() -> Family {
    Family::build(&cfg(FamilySpec::ZeroBeta {
        a: 0.6,
        eps: 0.9,
        g_lin: 1.6,
        g_log: 0.3,
    }))
    .unwrap()
}

fn sph(x: [f64; 4]) -> ChartPoint {
    Chart::spherical().point(x).unwrap()
}

fn random_sph(n: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            sph([
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.4..4.0),
                rng.gen_range(0.15..std::f64::consts::PI - 0.15),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ])
        })
        .collect()
}

#[test]
fn free_rest_spinor_inverts_to_zero_potential() {
    let fam = Family::build(&cfg(FamilySpec::FreeRest)).unwrap();
    let p = Chart::cartesian().point([0.23, 0.4, 0.5, 0.6]).unwrap();
    let inv = fam.invert(&p, DerivMode::Analytic).unwrap();
    for a in inv.a_coord {
        assert!(a.abs() < 1e-12, "A = {:?}", inv.a_coord);
    }
    // P = -qA = 0 under the xi = 0 gauge; the kinematic momentum is mc v
    for pc in inv.p_tangent {
        assert!(pc.abs() < 1e-12);
    }
    let field = fam.spinor();
    let jet = PolarJet::compute(field.as_ref(), &p, DerivMode::Analytic).unwrap();
    let pk = macroscopic_momentum(&jet, &fam.consts);
    assert!((pk[0] - 1.0).abs() < 1e-13 && pk[1..].iter().all(|x| x.abs() < 1e-13));
}

#[test]
fn hydrogen_potential_is_coulomb() {
    let fam = hydrogen();
    for p in random_sph(60, 11) {
        let inv = fam.invert(&p, DerivMode::Analytic).unwrap();
        let expect = -ALPHA / p.x[1];
        assert!(
            (inv.a_coord[0] - expect).abs() < 1e-10,
            "A_t = {} vs {} at {:?}",
            inv.a_coord[0],
            expect,
            p.x
        );
        for k in 1..4 {
            assert!(inv.a_coord[k].abs() < 1e-10, "A_{k} = {}", inv.a_coord[k]);
        }
        assert!(inv.imag_residue < 1e-10);
    }
}

#[test]
fn zero_beta_potential_matches_closed_forms() {
    // A_t = hbar sqrt(1-a^2) G'/(2a) - cm/a + eps/c,
    // A_phi = r sin(th) (-2 sqrt(1-a^2) cm + hbar G')/(2a)  (covariant)
    let fam = zero_beta();
    let (a, eps) = (0.6, 0.9);
    let sq = (1.0f64 - a * a).sqrt();
    for p in random_sph(60, 12) {
        let inv = fam.invert(&p, DerivMode::Analytic).unwrap();
        let gp = 1.6 + 0.3 / p.x[1];
        let a_t = sq * gp / (2.0 * a) - 1.0 / a + eps;
        let a_phi = p.x[1] * p.x[2].sin() * (-2.0 * sq + gp) / (2.0 * a);
        assert!((inv.a_coord[0] - a_t).abs() < 1e-10, "A_t at {:?}", p.x);
        assert!((inv.a_coord[3] - a_phi).abs() < 1e-10, "A_phi at {:?}", p.x);
        assert!(inv.a_coord[1].abs() < 1e-10 && inv.a_coord[2].abs() < 1e-10);
    }
}

#[test]
fn zero_beta_cartesian_matches_vecpoth() {
    // A^0 = (sqrt(1-a^2) hbar G' + 2 a eps/c - 2 c m)/(2a),
    // A^1 = sin(phi)(-2 sqrt(1-a^2) c m + hbar G')/(2a), A^2 = -cos(phi)(...),
    // A^3 = 0; the inversion returns covariant components.
    let consts = PhysConsts::default();
    let fam_sph = zero_beta();
    let field = fam_sph.spinor();
    // same family evaluated through the cartesian chart
    struct CartWrap<'a>(&'a dyn crdi_core::SpinorField);
    impl crdi_core::SpinorField for CartWrap<'_> {
        fn chart(&self) -> Chart {
            Chart::cartesian()
        }
        fn psi(&self, p: &ChartPoint) -> crdi_core::CMat4 {
            self.0.psi(p)
        }
        fn dpsi_analytic(&self, p: &ChartPoint, mu: usize) -> Option<crdi_core::CMat4> {
            self.0.dpsi_analytic(p, mu)
        }
    }
    // note: the family's jets handle both charts through the chart tag
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    for _ in 0..40 {
        let x = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.3..2.0),
            rng.gen_range(0.3..2.0),
            rng.gen_range(0.3..2.0),
        ];
        let p = Chart::cartesian().point(x).unwrap();
        let wrap = CartWrap(field.as_ref());
        let inv = invert_cartesian(&wrap, &consts, &p, DerivMode::Analytic).unwrap();
        let (a, eps) = (0.6, 0.9);
        let sq = (1.0f64 - a * a).sqrt();
        let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
        let ph = x[2].atan2(x[1]);
        let gp = 1.6 + 0.3 / r;
        let a0 = (sq * gp + 2.0 * a * eps - 2.0) / (2.0 * a);
        let ak = (-2.0 * sq + gp) / (2.0 * a);
        // covariant spatial components flip sign
        assert!((inv.a_coord[0] - a0).abs() < 1e-9, "A_0 at {x:?}");
        assert!((inv.a_coord[1] + ph.sin() * ak).abs() < 1e-9);
        assert!((inv.a_coord[2] - ph.cos() * ak).abs() < 1e-9);
        assert!(inv.a_coord[3].abs() < 1e-9);
    }
}

#[test]
fn cartesian_and_covariant_routes_agree_after_index_transform() {
    let fam = zero_beta();
    let field = fam.spinor();
    struct CartWrap<'a>(&'a dyn crdi_core::SpinorField);
    impl crdi_core::SpinorField for CartWrap<'_> {
        fn chart(&self) -> Chart {
            Chart::cartesian()
        }
        fn psi(&self, p: &ChartPoint) -> crdi_core::CMat4 {
            self.0.psi(p)
        }
        fn dpsi_analytic(&self, p: &ChartPoint, mu: usize) -> Option<crdi_core::CMat4> {
            self.0.dpsi_analytic(p, mu)
        }
    }
    let consts = PhysConsts::default();
    for psph in random_sph(100, 21) {
        let (r, th, ph) = (psph.x[1], psph.x[2], psph.x[3]);
        let inv_sph = fam.invert(&psph, DerivMode::Analytic).unwrap();
        let xc = [
            psph.x[0],
            r * th.sin() * ph.cos(),
            r * th.sin() * ph.sin(),
            r * th.cos(),
        ];
        let pc = Chart::cartesian().point(xc).unwrap();
        let wrap = CartWrap(field.as_ref());
        let inv_c = invert_cartesian(&wrap, &consts, &pc, DerivMode::Analytic).unwrap();
        // A_mu(sph) = J^nu_mu A_nu(cart), J = d(cart)/d(sph)
        let (st, ct) = th.sin_cos();
        let (sp, cp) = ph.sin_cos();
        let jac = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, cp * st, r * ct * cp, -r * sp * st],
            [0.0, sp * st, r * ct * sp, r * cp * st],
            [0.0, ct, -r * st, 0.0],
        ];
        for mu in 0..4 {
            let mut expect = 0.0;
            for nu in 0..4 {
                expect += jac[nu][mu] * inv_c.a_coord[nu];
            }
            assert!(
                (inv_sph.a_coord[mu] - expect).abs() < 1e-8,
                "mu={mu} at {:?}: {} vs {}",
                psph.x,
                inv_sph.a_coord[mu],
                expect
            );
        }
    }
}

#[test]
fn zero_beta_r_tensor_matches_printed_components() {
    let fam = zero_beta();
    let field = fam.spinor();
    for p in random_sph(20, 33) {
        let jet = PolarJet::compute(field.as_ref(), &p, DerivMode::Analytic).unwrap();
        let rt = r_tensor(&jet, &SpinConnection::zero()).unwrap();
        let ph = p.x[3];
        assert!((rt.r[1][3][2] - ph.cos()).abs() < 1e-10, "R_13theta");
        assert!((rt.r[2][3][2] - ph.sin()).abs() < 1e-10, "R_23theta");
        assert!((rt.r[1][2][3] - (-1.0)).abs() < 1e-10, "R_12phi");
        // antisymmetry is exact by construction
        for i in 0..4 {
            for j in 0..4 {
                for mu in 0..4 {
                    assert!((rt.r[i][j][mu] + rt.r[j][i][mu]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn identity_rotor_gives_minus_omega() {
    // R_{ij mu} = -Omega_{ij mu} for a constant spinor field
    struct ConstField;
    impl crdi_core::SpinorField for ConstField {
        fn chart(&self) -> Chart {
            Chart::spherical()
        }
        fn psi(&self, _p: &ChartPoint) -> crdi_core::CMat4 {
            crdi_core::CMat4::identity().scale_re(2.0)
        }
        fn dpsi_analytic(&self, _p: &ChartPoint, _mu: usize) -> Option<crdi_core::CMat4> {
            Some(crdi_core::CMat4::zero())
        }
    }
    let p = sph([0.0, 1.5, 1.0, 0.7]);
    let jet = PolarJet::compute(&ConstField, &p, DerivMode::Analytic).unwrap();
    let mut omega = SpinConnection::zero();
    omega.omega[0][2][1] = 0.37;
    omega.omega[2][0][1] = -0.37;
    omega.omega[1][3][3] = -0.81;
    omega.omega[3][1][3] = 0.81;
    let rt = r_tensor(&jet, &omega).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            for mu in 0..4 {
                assert!((rt.r[i][j][mu] + omega.omega[i][j][mu]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn geosvid_holds_for_both_families() {
    let geom = FrameGeometry::holonomic();
    for fam in [hydrogen(), zero_beta()] {
        let field = fam.spinor();
        for p in random_sph(100, 5) {
            let res = geosvid_residual(field.as_ref(), &geom, &p, DerivMode::Analytic).unwrap();
            assert!(res < 1e-6, "GeosvId residual {res} at {:?}", p.x);
        }
    }
}

#[test]
fn continuity_constraints_hold() {
    let geom = FrameGeometry::holonomic();
    let consts = PhysConsts::default();
    for fam in [hydrogen(), zero_beta()] {
        let field = fam.spinor();
        for p in random_sph(40, 6) {
            let (c1, c2) =
                constraint_residuals(field.as_ref(), &geom, &consts, &p, DerivMode::Analytic)
                    .unwrap();
            assert!(c1.abs() < 1e-6, "c1 = {c1} at {:?}", p.x);
            assert!(c2.abs() < 1e-6, "c2 = {c2} at {:?}", p.x);
        }
    }
}

#[test]
fn hydrogen_spin_continuity_cancels_nontrivially() {
    let fam = hydrogen();
    let field = fam.spinor();
    let geom = FrameGeometry::holonomic();
    let consts = PhysConsts::default();
    // generic interior point: both terms exceed 1e-2, their sum stays tiny
    let p = sph([0.0, 0.9, 1.0, 0.7]);
    let (div_term, sink_term) =
        spin_continuity_terms(field.as_ref(), &geom, &consts, &p, DerivMode::Analytic).unwrap();
    assert!(div_term.abs() > 1e-2, "divergence term {div_term}");
    assert!(sink_term.abs() > 1e-2, "sink term {sink_term}");
    assert!((div_term + sink_term).abs() < 1e-6);
}

#[test]
fn general_ansatz_fails_purity() {
    let fam = Family::build(&cfg(FamilySpec::GeneralAnsatz {
        f0: 0.3,
        g0: 0.2,
        decay: 0.4,
    }))
    .unwrap();
    let p = Chart::cartesian().point([0.1, 0.7, 0.4, 0.9]).unwrap();
    match fam.invert(&p, DerivMode::Analytic) {
        Err(Error::ConstraintViolation { .. }) => {}
        other => panic!("expected ConstraintViolation, got {other:?}"),
    }
}

#[test]
fn singular_point_reported() {
    // octet with r = (1,0,0,0), s = (0,0,0,1): both invariants vanish
    struct Singular;
    impl crdi_core::SpinorField for Singular {
        fn chart(&self) -> Chart {
            Chart::cartesian()
        }
        fn psi(&self, _p: &ChartPoint) -> crdi_core::CMat4 {
            crdi_core::spinor::to_matrix(&crdi_core::ColumnSpinor::new([
                crdi_core::C64::new(1.0, 0.0),
                crdi_core::C64::new(0.0, 0.0),
                crdi_core::C64::new(1.0, 0.0),
                crdi_core::C64::new(0.0, 0.0),
            ]))
        }
    }
    let p = Chart::cartesian().point([0.0, 0.1, 0.2, 0.3]).unwrap();
    let consts = PhysConsts::default();
    match invert_cartesian(&Singular, &consts, &p, DerivMode::Fd) {
        Err(Error::SingularSpinor { .. }) => {}
        other => panic!("expected SingularSpinor, got {other:?}"),
    }
}

#[test]
fn fd_mode_agrees_with_analytic_mode() {
    let fam = hydrogen();
    for p in random_sph(15, 9) {
        let ia = fam.invert(&p, DerivMode::Analytic).unwrap();
        let ifd = fam.invert(&p, DerivMode::Fd).unwrap();
        for mu in 0..4 {
            assert!(
                (ia.a_coord[mu] - ifd.a_coord[mu]).abs() < 1e-7,
                "mu={mu}: {} vs {}",
                ia.a_coord[mu],
                ifd.a_coord[mu]
            );
        }
    }
}

#[test]
fn tampered_connection_breaks_the_dirac_equation() {
    // Both inversion routes are the same linear functional of the R tensor
    // (that is why the component formula holds for arbitrary even fields), so
    // a wrong spin connection shifts them together. The falsification
    // surfaces downstream: the potential produced with a tampered connection
    // no longer solves the Dirac equation in the true geometry.
    let fam = zero_beta();
    let field = fam.spinor();
    let consts = PhysConsts::default();
    let p = sph([0.0, 1.2, 1.0, 0.4]);
    let mut bad = SpinConnection::zero();
    bad.omega[0][1][2] = 0.5;
    bad.omega[1][0][2] = -0.5;
    let tampered = FrameGeometry {
        tetrad: crdi_core::TetradField::Holonomic,
        omega: crdi_core::inversion::OmegaSource::Explicit(Box::new(move |_p| Ok(bad))),
    };
    let inv_bad = invert_covariant(field.as_ref(), &tampered, &consts, &p, DerivMode::Analytic)
        .expect("routes shift together");
    let a_bad = inv_bad.a_coord;
    let a_field = crdi_core::PotentialField::new(Chart::spherical(), move |_q| Ok(a_bad));
    let res = crdi_core::verify::dirac_residual(
        field.as_ref(),
        &a_field,
        &FrameGeometry::holonomic(),
        &consts,
        &p,
        DerivMode::Analytic,
    )
    .unwrap();
    assert!(res > 1e-3, "tampered-connection residual {res} too small");

    // the honest geometry still yields a solving potential at the same point
    let inv_good =
        invert_covariant(field.as_ref(), &FrameGeometry::holonomic(), &consts, &p, DerivMode::Analytic)
            .unwrap();
    let a_good = inv_good.a_coord;
    let a_field_good = crdi_core::PotentialField::new(Chart::spherical(), move |_q| Ok(a_good));
    let res_good = crdi_core::verify::dirac_residual(
        field.as_ref(),
        &a_field_good,
        &FrameGeometry::holonomic(),
        &consts,
        &p,
        DerivMode::Analytic,
    )
    .unwrap();
    assert!(res_good < 1e-10, "baseline residual {res_good}");
}

#[test]
fn velocity_spin_lowering_consistency() {
    // v_a v^a = 1 and the covariant components used in the printed formulas
    let fam = zero_beta();
    let field = fam.spinor();
    let p = sph([0.0, 1.0, 1.2, 2.0]);
    let jet = PolarJet::compute(field.as_ref(), &p, DerivMode::Analytic).unwrap();
    let vv: f64 = (0..4).map(|i| ETA[i] * jet.v[i] * jet.v[i]).sum();
    let ss: f64 = (0..4).map(|i| ETA[i] * jet.s[i] * jet.s[i]).sum();
    let vs: f64 = (0..4).map(|i| ETA[i] * jet.v[i] * jet.s[i]).sum();
    assert!((vv - 1.0).abs() < 1e-12 && (ss + 1.0).abs() < 1e-12 && vs.abs() < 1e-12);
}
