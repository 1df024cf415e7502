//! Solution families, the radial constraint ODEs, the rest-frame
//! transformation and field-strength extraction.

use crate::algebra::CMat4;
use crate::clifford::{exp_ibold, gamma_lower, ibold};
use crate::error::{Error, Result};
use crate::geometry::{Chart, ChartPoint, ChartKind, RotorField, SpinConnection, TetradField};
use crate::inversion::{
    invert_cartesian, invert_covariant, DerivMode, FrameGeometry, OmegaSource, PhysConsts,
    PotentialField, SpinorField,
};
use crate::jets::Jet;
use crate::ode::{integrate, OdeOptions, OdeSolution};
use crate::spinor::MatrixSpinor;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionConfig {
    #[serde(flatten)]
    pub family: FamilySpec,
    #[serde(default)]
    pub constants: PhysConsts,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Psi = exp(-g2 g1 mc^2 t / hbar), the plane-wave rest solution.
    FreeRest,
    /// Generic smooth (f, g, density) wavepacket; generally fails the purity
    /// constraints, which is the point: not every ansatz admits a real
    /// potential.
    GeneralAnsatz { f0: f64, g0: f64, decay: f64 },
    /// g = 0 reduction: azimuthal boost in the x-y plane, cylindrical density.
    Planar2d { a: f64, g_lin: f64, g_log: f64 },
    Hydrogen {
        z: f64,
        alpha: f64,
        /// Energy; defaults to the constant-X value mc^2 sqrt(1 - (Z alpha)^2).
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default)]
        profile: HydrogenProfileSpec,
        /// Chart the field is expressed on; defaults to spherical. The same
        /// solution on the cartesian chart goes through the cartesian RDI.
        #[serde(default)]
        chart: Option<ChartKind>,
    },
    ZeroBeta {
        a: f64,
        eps: f64,
        g_lin: f64,
        g_log: f64,
        #[serde(default)]
        chart: Option<ChartKind>,
    },
    ZeroBetaUniformB { i_loop: f64, mu0: f64, r_loop: f64 },
    ZeroBetaCoulombSolenoid {
        a: f64,
        alpha_c: f64,
        i_loop: f64,
        mu0: f64,
        r_loop: f64,
    },
    RestFrameOf { inner: Box<SolutionConfig> },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HydrogenProfileSpec {
    #[default]
    Constant,
    Ode {
        x0: f64,
        g0: f64,
        r0: f64,
        r_span: [f64; 2],
    },
}

// ---------------------------------------------------------------------------
// radial profiles and the constraint ODEs
// ---------------------------------------------------------------------------

/// X = -csch(2 artanh Z) maps the Riccati variable back to X. The map is
/// invariant under Z -> -1/Z, so both square-root branches of the inverse
/// represent the same X.
pub fn riccati_z_to_x(z: f64) -> f64 {
    -(1.0 - z * z) / (2.0 * z)
}

/// The artanh-domain representative |Z| <= 1, in cancellation-free form.
pub fn x_to_riccati_z(x: f64) -> f64 {
    let s = (x * x + 1.0).sqrt();
    if x >= 0.0 {
        -1.0 / (x + s)
    } else {
        1.0 / (s - x)
    }
}

/// The integration branch Z = X + sqrt(X^2 + 1) on which the constraint
/// equations take their Riccati form.
pub fn x_to_riccati_branch(x: f64) -> f64 {
    let s = (x * x + 1.0).sqrt();
    if x >= 0.0 {
        x + s
    } else {
        // = x + s, stable for large negative x
        1.0 / (s - x)
    }
}

/// Radial profile functions X(r), G(r) with exact derivatives.
#[derive(Clone)]
pub enum RadialProfiles {
    /// Constant-X hydrogen fixed point: X0 = sqrt(1-(Z a)^2)/(Z a),
    /// G' = 2 mc Z a / hbar - 2 sqrt(1-(Z a)^2)/r.
    ConstantX {
        z_alpha: f64,
        consts: PhysConsts,
        g0: f64,
    },
    Spline {
        direct: Arc<OdeSolution<2>>,
        riccati: Option<Arc<OdeSolution<2>>>,
    },
}

impl RadialProfiles {
    pub fn x(&self, r: f64) -> f64 {
        match self {
            RadialProfiles::ConstantX { z_alpha, .. } => {
                (1.0 - z_alpha * z_alpha).sqrt() / z_alpha
            }
            RadialProfiles::Spline { direct, .. } => direct.eval(r)[0],
        }
    }

    pub fn x_prime(&self, r: f64) -> f64 {
        match self {
            RadialProfiles::ConstantX { .. } => 0.0,
            RadialProfiles::Spline { direct, .. } => direct.eval_deriv(r)[0],
        }
    }

    pub fn g(&self, r: f64) -> f64 {
        match self {
            RadialProfiles::ConstantX { z_alpha, consts, g0 } => {
                2.0 * consts.m * consts.c * z_alpha / consts.hbar * r
                    - 2.0 * (1.0 - z_alpha * z_alpha).sqrt() * r.ln()
                    + g0
            }
            RadialProfiles::Spline { direct, .. } => direct.eval(r)[1],
        }
    }

    pub fn g_prime(&self, r: f64) -> f64 {
        match self {
            RadialProfiles::ConstantX { z_alpha, consts, .. } => {
                2.0 * consts.m * consts.c * z_alpha / consts.hbar
                    - 2.0 * (1.0 - z_alpha * z_alpha).sqrt() / r
            }
            RadialProfiles::Spline { direct, .. } => direct.eval_deriv(r)[1],
        }
    }

    /// The artanh-domain Riccati representative (|Z| <= 1); the integration
    /// itself runs on the reciprocal branch where the printed equations hold.
    pub fn z_riccati(&self, r: f64) -> f64 {
        match self {
            RadialProfiles::ConstantX { .. } => x_to_riccati_z(self.x(r)),
            RadialProfiles::Spline { riccati, direct } => {
                let z = riccati
                    .as_ref()
                    .map(|s| s.eval(r)[0])
                    .unwrap_or_else(|| x_to_riccati_branch(direct.eval(r)[0]));
                if z.abs() > 1.0 {
                    -1.0 / z
                } else {
                    z
                }
            }
        }
    }
}

/// Integrate the radial constraints for a given potential V(r), from
/// (X0, G0) at r0 over r_span, by the direct route and the Riccati route;
/// the two must agree to 1e-8 and Riccati pole crossings abort with a
/// diagnostic.
pub fn hydrogen_profiles(
    v: impl Fn(f64) -> f64 + Copy,
    eps: f64,
    consts: &PhysConsts,
    r0: f64,
    x0: f64,
    g0: f64,
    r_span: [f64; 2],
) -> Result<RadialProfiles> {
    if r_span[0] <= 0.0 || r0 < r_span[0] || r0 > r_span[1] {
        return Err(Error::Config(format!(
            "radial span {r_span:?} must exclude 0 and contain r0 = {r0}"
        )));
    }
    let (hbar, c, m) = (consts.hbar, consts.c, consts.m);
    let direct_rhs = move |r: f64, y: &[f64; 2]| {
        let x = y[0];
        let sq = (x * x + 1.0).sqrt();
        let dx = -2.0 * sq / r * (r * (eps / (hbar * c) + v(r) / hbar) * sq - 1.0 - m * c / hbar * r * x);
        let dg = 2.0 * (m * c / hbar * sq - x * (eps / (hbar * c) + v(r) / hbar));
        [dx, dg]
    };
    let riccati_rhs = move |r: f64, y: &[f64; 2]| {
        let z = y[0];
        let dz = z * z * (c * c * m - c * v(r) - eps) / (c * hbar)
            - (c * c * m + c * v(r) + eps) / (c * hbar)
            + 2.0 * z / r;
        let dg = z * (c * c * m - c * v(r) - eps) / (c * hbar)
            + (c * c * m + c * v(r) + eps) / (c * hbar * z);
        [dz, dg]
    };

    let opts = OdeOptions {
        max_step_rel: 1e-3,
        ..OdeOptions::default()
    };
    let run = |rhs: &dyn Fn(f64, &[f64; 2]) -> [f64; 2],
                   y0: [f64; 2],
                   pole: bool|
     -> Result<OdeSolution<2>> {
        let mut fwd_event = pole_event(pole);
        let fwd = integrate(rhs, r0, r_span[1], y0, &opts, Some(&mut fwd_event))?;
        if r0 > r_span[0] {
            let mut bwd_event = pole_event(pole);
            let bwd = integrate(rhs, r0, r_span[0], y0, &opts, Some(&mut bwd_event))?;
            // stitch: backward run reversed, then forward run
            let mut t: Vec<f64> = bwd.t.iter().rev().copied().collect();
            let mut y: Vec<[f64; 2]> = bwd.y.iter().rev().copied().collect();
            let mut dy: Vec<[f64; 2]> = bwd.dy.iter().rev().copied().collect();
            t.extend_from_slice(&fwd.t[1..]);
            y.extend_from_slice(&fwd.y[1..]);
            dy.extend_from_slice(&fwd.dy[1..]);
            Ok(OdeSolution { t, y, dy })
        } else {
            Ok(fwd)
        }
    };

    let z0 = x_to_riccati_branch(x0);
    let riccati = run(&riccati_rhs, [z0, g0], true).map_err(|e| match e {
        Error::Integration { r, reason } if reason.contains("pole") => {
            let z = reason
                .split("Z = ")
                .nth(1)
                .and_then(|s| s.split_whitespace().next())
                .and_then(|s| s.parse().ok())
                .unwrap_or(f64::NAN);
            Error::PoleCrossing { r, z }
        }
        other => other,
    })?;
    let direct = run(&direct_rhs, [x0, g0], false)?;

    // cross-route agreement on a sample
    let n = 64;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let r = r_span[0] + (r_span[1] - r_span[0]) * i as f64 / n as f64;
        let xd = direct.eval(r)[0];
        let xr = riccati_z_to_x(riccati.eval(r)[0]);
        worst = worst.max((xd - xr).abs());
    }
    if worst > 1e-8 * (1.0 + x0.abs()) {
        return Err(Error::PathDisagreement {
            point: [r_span[0], r_span[1], 0.0, 0.0],
            disagreement: worst,
            tolerance: 1e-8 * (1.0 + x0.abs()),
        });
    }

    Ok(RadialProfiles::Spline {
        direct: Arc::new(direct),
        riccati: Some(Arc::new(riccati)),
    })
}

/// On the integration branch, Z -> 0 means X -> -inf (and 1/Z blows up in
/// the G equation) while Z -> inf means X -> +inf.
fn pole_event(enabled: bool) -> impl FnMut(f64, &[f64; 2]) -> Option<String> {
    move |r, y| {
        if enabled && (y[0].abs() >= 1e9 || y[0].abs() < 1e-9) {
            Some(format!("Riccati pole crossing: Z = {:.6e} at r = {r:.6e}", y[0]))
        } else {
            None
        }
    }
}

// ---------------------------------------------------------------------------
// rotor factor jets
// ---------------------------------------------------------------------------

/// A matrix factor with its four partial derivatives.
#[derive(Clone, Copy)]
struct FactorJet {
    val: CMat4,
    d: [CMat4; 4],
}

impl FactorJet {
    fn mul(&self, o: &FactorJet) -> FactorJet {
        FactorJet {
            val: self.val * o.val,
            d: std::array::from_fn(|mu| self.d[mu] * o.val + self.val * o.d[mu]),
        }
    }

    fn scale_jet(&self, s: &Jet) -> FactorJet {
        FactorJet {
            val: self.val.scale_re(s.v),
            d: std::array::from_fn(|mu| self.d[mu].scale_re(s.v) + self.val.scale_re(s.d[mu])),
        }
    }
}

fn g2g1() -> CMat4 {
    gamma_lower(2) * gamma_lower(1)
}

fn g3g1() -> CMat4 {
    gamma_lower(3) * gamma_lower(1)
}

fn g1g0() -> CMat4 {
    gamma_lower(1) * gamma_lower(0)
}

fn g2g0() -> CMat4 {
    gamma_lower(2) * gamma_lower(0)
}

fn rot_phi_value(chi: f64) -> CMat4 {
    CMat4::identity().scale_re(chi.cos()) - g2g1().scale_re(chi.sin())
}

fn rot_31_value(chi: f64) -> CMat4 {
    CMat4::identity().scale_re(chi.cos()) + g3g1().scale_re(chi.sin())
}

fn boost_value(phi: f64, w: f64) -> CMat4 {
    let b = g1g0().scale_re(-phi.sin()) + g2g0().scale_re(phi.cos());
    CMat4::identity().scale_re((w / 2.0).cosh()) + b.scale_re((w / 2.0).sinh())
}

/// exp(-g2 g1 chi): the azimuthal/phase rotation factor.
fn rot_phi(chi: &Jet) -> FactorJet {
    let b = g2g1();
    let val = CMat4::identity().scale_re(chi.v.cos()) - b.scale_re(chi.v.sin());
    let dv = -(b * val);
    FactorJet {
        val,
        d: std::array::from_fn(|mu| dv.scale_re(chi.d[mu])),
    }
}

/// exp(+g3 g1 chi): the 3-1 plane rotation with the orientation that
/// reproduces the printed spinors of both families.
fn rot_31(chi: &Jet) -> FactorJet {
    let b = g3g1();
    let val = CMat4::identity().scale_re(chi.v.cos()) + b.scale_re(chi.v.sin());
    let dv = b * val;
    FactorJet {
        val,
        d: std::array::from_fn(|mu| dv.scale_re(chi.d[mu])),
    }
}

/// Azimuthal boost exp(b(phi) w/2) with b = -sin(phi) g1 g0 + cos(phi) g2 g0.
fn boost_factor(phi: &Jet, w: &Jet) -> FactorJet {
    let b = g1g0().scale_re(-phi.v.sin()) + g2g0().scale_re(phi.v.cos());
    let db_dphi = g1g0().scale_re(-phi.v.cos()) + g2g0().scale_re(-phi.v.sin());
    let ch = (w.v / 2.0).cosh();
    let sh = (w.v / 2.0).sinh();
    let val = CMat4::identity().scale_re(ch) + b.scale_re(sh);
    FactorJet {
        val,
        d: std::array::from_fn(|mu| {
            (CMat4::identity().scale_re(sh) + b.scale_re(ch)).scale_re(w.d[mu] / 2.0)
                + db_dphi.scale_re(sh * phi.d[mu])
        }),
    }
}

/// exp(ibold beta/2).
fn ibold_factor(beta: &Jet) -> FactorJet {
    let val = exp_ibold(beta.v / 2.0);
    let dv = (ibold() * val).scale_re(0.5);
    FactorJet {
        val,
        d: std::array::from_fn(|mu| dv.scale_re(beta.d[mu])),
    }
}

/// Jets of (x0, r, theta, phi) with respect to the chart coordinates.
fn spherical_coord_jets(p: &ChartPoint) -> (Jet, Jet, Jet, Jet) {
    match p.chart.kind {
        ChartKind::Spherical => (
            Jet::coord(p.x[0], 0),
            Jet::coord(p.x[1], 1),
            Jet::coord(p.x[2], 2),
            Jet::coord(p.x[3], 3),
        ),
        ChartKind::Cartesian => {
            let (x, y, z) = (p.x[1], p.x[2], p.x[3]);
            let r = (x * x + y * y + z * z).sqrt();
            let rc = (x * x + y * y).sqrt();
            let rj = Jet {
                v: r,
                d: [0.0, x / r, y / r, z / r],
            };
            let thj = Jet {
                v: (z / r).acos(),
                d: [
                    0.0,
                    x * z / (r * r * rc),
                    y * z / (r * r * rc),
                    -rc / (r * r),
                ],
            };
            let phj = Jet {
                v: y.atan2(x),
                d: [0.0, -y / (rc * rc), x / (rc * rc), 0.0],
            };
            (Jet::coord(p.x[0], 0), rj, thj, phj)
        }
    }
}

// ---------------------------------------------------------------------------
// the families
// ---------------------------------------------------------------------------

/// A constructed solution: a spinor field plus the frame geometry it is
/// naturally verified in.
pub struct Family {
    pub spec: FamilySpec,
    pub consts: PhysConsts,
    pub kappa: f64,
    kind: FamilyKind,
}

enum FamilyKind {
    FreeRest,
    General {
        f: ScalarField,
        g: ScalarField,
        sqrt_rho: ScalarField,
        eps: f64,
        chart: Chart,
    },
    Hydrogen(HydrogenField),
    ZeroBeta(ZeroBetaField),
    RestFrame(Box<RestFrameBundle>),
}

pub type ScalarField = Arc<dyn Fn(&ChartPoint) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct HydrogenField {
    pub profiles: RadialProfiles,
    pub eps: f64,
    pub consts: PhysConsts,
    pub kappa: f64,
    pub chart: Chart,
}

#[derive(Clone)]
pub struct ZeroBetaField {
    pub a: f64,
    pub eps: f64,
    /// G(r) and G'(r) as jets over r.
    pub g_lin: f64,
    pub g_log: f64,
    /// extra solenoid slope a*i*mu0/(2 R hbar) folded into g_lin by presets
    pub uniform_b: bool,
    pub consts: PhysConsts,
    pub kappa: f64,
    pub chart: Chart,
}

impl HydrogenField {
    fn jets(&self, p: &ChartPoint) -> (Jet, Jet, Jet, Jet, Jet, Jet) {
        let (tj, rj, thj, phj) = spherical_coord_jets(p);
        let x = Jet {
            v: self.profiles.x(rj.v),
            d: rj.d.map(|dr| dr * self.profiles.x_prime(rj.v)),
        };
        let g = Jet {
            v: self.profiles.g(rj.v),
            d: rj.d.map(|dr| dr * self.profiles.g_prime(rj.v)),
        };
        (tj, rj, thj, phj, x, g)
    }

    fn factor_jet(&self, p: &ChartPoint) -> FactorJet {
        let (tj, rj, thj, phj, x, g) = self.jets(p);
        let ct = thj.cos();
        let st = thj.sin();
        let sq1 = (x * x + Jet::constant(1.0)).sqrt();
        let f = st / sq1;
        let gfun = ct / x;
        let beta = gfun.atan();
        let w = f.atanh();
        let chi = (beta.scale(0.5).tan() * w.scale(0.5).tanh()).atan();
        let sr = Jet::constant(self.kappa)
            * (-g.scale(0.5)).exp()
            * (x * x + ct * ct).powf(0.25)
            / rj;
        let c = self.consts;
        let phase = tj.scale(self.eps / (c.hbar * c.c)) - phj.scale(0.5);
        let prod = ibold_factor(&beta)
            .mul(&boost_factor(&phj, &w))
            .mul(&rot_phi(&phj.scale(0.5)))
            .mul(&rot_31(&chi))
            .mul(&rot_phi(&phase));
        prod.scale_jet(&sr)
    }

    fn psi_value(&self, p: &ChartPoint) -> CMat4 {
        let (tj, rj, thj, phj, x, g) = self.jets(p);
        let ct = thj.v.cos();
        let st = thj.v.sin();
        let beta = (ct / x.v).atan();
        let f = st / (x.v * x.v + 1.0).sqrt();
        let w = f.atanh();
        let chi = ((beta / 2.0).tan() * (w / 2.0).tanh()).atan();
        let sr = self.kappa * (-g.v / 2.0).exp() * (x.v * x.v + ct * ct).powf(0.25) / rj.v;
        let c = self.consts;
        let phase = self.eps / (c.hbar * c.c) * tj.v - phj.v / 2.0;
        (exp_ibold(beta / 2.0)
            * boost_value(phj.v, w)
            * rot_phi_value(phj.v / 2.0)
            * rot_31_value(chi)
            * rot_phi_value(phase))
        .scale_re(sr)
    }

    /// Frame rotor B Rphi(phi/2) R31(chi): the trailing phi/2 rotation lives
    /// in the phase.
    pub fn frame_rotor(&self) -> RotorField {
        let this = self.clone();
        let this2 = self.clone();
        RotorField::new(move |p| this.frame_rotor_jet(p).val)
            .with_partial(move |p, mu| this2.frame_rotor_jet(p).d[mu])
    }

    fn frame_rotor_jet(&self, p: &ChartPoint) -> FactorJet {
        let (_tj, _rj, thj, phj, x, _g) = self.jets(p);
        let ct = thj.cos();
        let st = thj.sin();
        let sq1 = (x * x + Jet::constant(1.0)).sqrt();
        let beta = (ct / x).atan();
        let w = (st / sq1).atanh();
        let chi = (beta.scale(0.5).tan() * w.scale(0.5).tanh()).atan();
        boost_factor(&phj, &w)
            .mul(&rot_phi(&phj.scale(0.5)))
            .mul(&rot_31(&chi))
    }

    /// Rest-frame matrix spinor sqrt(rho) e^{ibold beta/2} e^{-g2g1 (eps t/hbar c - phi/2)}.
    fn rest_psi_jet(&self, p: &ChartPoint) -> FactorJet {
        let (tj, rj, thj, phj, x, g) = self.jets(p);
        let ct = thj.cos();
        let beta = (ct / x).atan();
        let sr = Jet::constant(self.kappa)
            * (-g.scale(0.5)).exp()
            * (x * x + ct * ct).powf(0.25)
            / rj;
        let c = self.consts;
        let phase = tj.scale(self.eps / (c.hbar * c.c)) - phj.scale(0.5);
        ibold_factor(&beta).mul(&rot_phi(&phase)).scale_jet(&sr)
    }
}

impl ZeroBetaField {
    fn g_jet(&self, r: Jet) -> Jet {
        r.scale(self.g_lin) + r.ln().scale(self.g_log)
    }

    fn factor_jet(&self, p: &ChartPoint) -> FactorJet {
        let (tj, rj, thj, phj) = spherical_coord_jets(p);
        let g = self.g_jet(rj);
        let c = self.consts;
        let st = thj.sin();
        let sr = if self.uniform_b {
            // densitya1: kappa e^{-G/2} / (r sqrt(2 sin theta))
            Jet::constant(self.kappa / 2f64.sqrt())
                * (-g.scale(0.5)).exp()
                / (rj * st.sqrt())
        } else {
            // sqrt(a) * densityzeroYT, reproducing spinorCou entrywise
            Jet::constant(self.kappa * (1.0 - self.a * self.a).powf(0.25) / 2f64.sqrt())
                * (-g.scale(0.5)).exp()
                / (rj * st.sqrt())
        };
        let phase = tj.scale(self.eps / (c.hbar * c.c));
        let angle31 = thj.scale(0.5) + Jet::constant(std::f64::consts::FRAC_PI_4);
        let rot = rot_phi(&phj.scale(0.5)).mul(&rot_31(&angle31)).mul(&rot_phi(&phase));
        let prod = if self.uniform_b {
            rot // a = 1: f = 0, no boost
        } else {
            let f = -(1.0 - self.a * self.a).sqrt();
            let w = Jet::constant(f.atanh());
            boost_factor(&phj, &w).mul(&rot)
        };
        prod.scale_jet(&sr)
    }

    fn psi_value(&self, p: &ChartPoint) -> CMat4 {
        let (tj, rj, thj, phj) = spherical_coord_jets(p);
        let g = self.g_jet(rj).v;
        let c = self.consts;
        let st = thj.v.sin();
        let amp = if self.uniform_b {
            self.kappa / 2f64.sqrt()
        } else {
            self.kappa * (1.0 - self.a * self.a).powf(0.25) / 2f64.sqrt()
        };
        let sr = amp * (-g / 2.0).exp() / (rj.v * st.sqrt());
        let phase = self.eps / (c.hbar * c.c) * tj.v;
        let rot = rot_phi_value(phj.v / 2.0)
            * rot_31_value(thj.v / 2.0 + std::f64::consts::FRAC_PI_4)
            * rot_phi_value(phase);
        let m = if self.uniform_b {
            rot
        } else {
            let f = -(1.0 - self.a * self.a).sqrt();
            boost_value(phj.v, f.atanh()) * rot
        };
        m.scale_re(sr)
    }

    pub fn frame_rotor(&self) -> RotorField {
        let this = self.clone();
        let this2 = self.clone();
        RotorField::new(move |p| this.frame_rotor_jet(p).val)
            .with_partial(move |p, mu| this2.frame_rotor_jet(p).d[mu])
    }

    fn frame_rotor_jet(&self, p: &ChartPoint) -> FactorJet {
        let (_tj, _rj, thj, phj) = spherical_coord_jets(p);
        let angle31 = thj.scale(0.5) + Jet::constant(std::f64::consts::FRAC_PI_4);
        let rot = rot_phi(&phj.scale(0.5)).mul(&rot_31(&angle31));
        if self.uniform_b {
            rot
        } else {
            let f = -(1.0 - self.a * self.a).sqrt();
            let w = Jet::constant(f.atanh());
            boost_factor(&phj, &w).mul(&rot)
        }
    }

    fn rest_psi_jet(&self, p: &ChartPoint) -> FactorJet {
        let (tj, rj, thj, phj) = spherical_coord_jets(p);
        let _ = phj;
        let g = self.g_jet(rj);
        let c = self.consts;
        let st = thj.sin();
        let amp = if self.uniform_b {
            self.kappa / 2f64.sqrt()
        } else {
            self.kappa * (1.0 - self.a * self.a).powf(0.25) / 2f64.sqrt()
        };
        let sr = Jet::constant(amp) * (-g.scale(0.5)).exp() / (rj * st.sqrt());
        let phase = tj.scale(self.eps / (c.hbar * c.c));
        rot_phi(&phase).scale_jet(&sr)
    }
}

struct HydrogenSpinor(HydrogenField);
struct ZeroBetaSpinor(ZeroBetaField);

impl SpinorField for HydrogenSpinor {
    fn chart(&self) -> Chart {
        self.0.chart
    }
    fn psi(&self, p: &ChartPoint) -> CMat4 {
        self.0.psi_value(p)
    }
    fn dpsi_analytic(&self, p: &ChartPoint, mu: usize) -> Option<CMat4> {
        Some(self.0.factor_jet(p).d[mu])
    }
    fn psi_jet(&self, p: &ChartPoint, mode: DerivMode) -> (CMat4, [CMat4; 4]) {
        if mode == DerivMode::Analytic {
            let fj = self.0.factor_jet(p);
            (fj.val, fj.d)
        } else {
            let psi = self.psi(p);
            (psi, std::array::from_fn(|mu| self.dpsi(p, mu, mode)))
        }
    }
}

impl SpinorField for ZeroBetaSpinor {
    fn chart(&self) -> Chart {
        self.0.chart
    }
    fn psi(&self, p: &ChartPoint) -> CMat4 {
        self.0.psi_value(p)
    }
    fn dpsi_analytic(&self, p: &ChartPoint, mu: usize) -> Option<CMat4> {
        Some(self.0.factor_jet(p).d[mu])
    }
    fn psi_jet(&self, p: &ChartPoint, mode: DerivMode) -> (CMat4, [CMat4; 4]) {
        if mode == DerivMode::Analytic {
            let fj = self.0.factor_jet(p);
            (fj.val, fj.d)
        } else {
            let psi = self.psi(p);
            (psi, std::array::from_fn(|mu| self.dpsi(p, mu, mode)))
        }
    }
}

struct FreeRestSpinor {
    consts: PhysConsts,
}

impl SpinorField for FreeRestSpinor {
    fn chart(&self) -> Chart {
        Chart::cartesian()
    }
    fn psi(&self, p: &ChartPoint) -> CMat4 {
        let c = self.consts;
        let angle = Jet::coord(p.x[0], 0).scale(c.m * c.c / c.hbar);
        rot_phi(&angle).val
    }
    fn dpsi_analytic(&self, p: &ChartPoint, mu: usize) -> Option<CMat4> {
        let c = self.consts;
        let angle = Jet::coord(p.x[0], 0).scale(c.m * c.c / c.hbar);
        Some(rot_phi(&angle).d[mu])
    }
}

struct GeneralSpinor {
    f: ScalarField,
    g: ScalarField,
    sqrt_rho: ScalarField,
    eps: f64,
    consts: PhysConsts,
    chart: Chart,
}

impl SpinorField for GeneralSpinor {
    fn chart(&self) -> Chart {
        self.chart
    }
    fn psi(&self, p: &ChartPoint) -> CMat4 {
        build_general_matrix(
            (self.f)(p),
            (self.g)(p),
            (self.sqrt_rho)(p),
            self.eps,
            &self.consts,
            p,
        )
        .expect("general ansatz evaluation")
    }
}

/// The general prototype matrix spinor
/// Psi = sqrt(rho) e^{ibold beta/2} B U e^{-g2 g1 eps t/hbar},
/// beta = arctan(g), w = artanh(f),
/// U = e^{-g2g1 phi/2} R31(arctan(tan(beta/2) tanh(w/2))) e^{+g2g1 phi/2}.
pub fn build_general_matrix(
    f: f64,
    g: f64,
    sqrt_rho: f64,
    eps: f64,
    consts: &PhysConsts,
    p: &ChartPoint,
) -> Result<CMat4> {
    if f.abs() >= 1.0 {
        return Err(Error::SuperluminalBoost { f });
    }
    let (tj, _rj, _thj, phj) = spherical_coord_jets(p);
    let beta = g.atan();
    let w = f.atanh();
    let chi = Jet::constant(((beta / 2.0).tan() * (w / 2.0).tanh()).atan());
    let phase = tj.scale(eps / (consts.hbar * consts.c));
    let prod = ibold_factor(&Jet::constant(beta))
        .mul(&boost_factor(&phj, &Jet::constant(w)))
        .mul(&rot_phi(&phj.scale(0.5)))
        .mul(&rot_31(&chi))
        .mul(&rot_phi(&(-phj.scale(0.5))))
        .mul(&rot_phi(&phase));
    Ok(prod.val.scale_re(sqrt_rho))
}

/// build_general as a spec-level operation returning a decomposed spinor.
pub fn build_general(
    consts: &PhysConsts,
    eps: f64,
    f: &dyn Fn(&ChartPoint) -> f64,
    g: &dyn Fn(&ChartPoint) -> f64,
    rho: &dyn Fn(&ChartPoint) -> f64,
    p: &ChartPoint,
) -> Result<MatrixSpinor> {
    let rho_v = rho(p);
    if rho_v <= 0.0 {
        return Err(Error::Config("density must be positive".into()));
    }
    let m = build_general_matrix(f(p), g(p), rho_v.sqrt(), eps, consts, p)?;
    MatrixSpinor::from_matrix(m)
}

/// The hydrogen-choice tilt angle by the printed arccos form, with the
/// clamp-or-error policy: excesses beyond 1e-12 indicate an invalid pair,
/// not roundoff.
pub fn theta_angle_arccos(x: f64, theta: f64) -> Result<f64> {
    let (st, ct) = theta.sin_cos();
    let arg = (st * st * x + ct * ct * (x * x + 1.0).sqrt()) / (ct * ct + x * x).sqrt();
    if arg.abs() > 1.0 + 1e-12 {
        return Err(Error::ArccosDomain { arg });
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Zero-beta builder as a spec-level pointwise operation: the first column
/// reproduces the printed closed-form spinor entrywise.
pub fn build_zero_beta(
    a: f64,
    eps: f64,
    consts: &PhysConsts,
    kappa: f64,
    g: &dyn Fn(f64) -> f64,
    p: &ChartPoint,
) -> Result<MatrixSpinor> {
    if !(0.0..=1.0).contains(&a) || a == 0.0 {
        return Err(Error::Config(format!("zero-beta requires 0 < a <= 1, got {a}")));
    }
    let (tj, rj, thj, phj) = spherical_coord_jets(p);
    if thj.v.sin() <= 0.0 {
        return Err(Error::DomainViolation {
            coords: p.x,
            reason: "zero-beta density singular on the polar axis".into(),
        });
    }
    let gv = g(rj.v);
    let amp = if a == 1.0 {
        kappa / 2f64.sqrt()
    } else {
        kappa * (1.0 - a * a).powf(0.25) / 2f64.sqrt()
    };
    let sr = amp * (-gv / 2.0).exp() / (rj.v * thj.v.sin().sqrt());
    let angle31 = thj.scale(0.5) + Jet::constant(std::f64::consts::FRAC_PI_4);
    let phase = tj.scale(eps / (consts.hbar * consts.c));
    let rot = rot_phi(&phj.scale(0.5)).mul(&rot_31(&angle31)).mul(&rot_phi(&phase));
    let prod = if a == 1.0 {
        rot
    } else {
        let w = Jet::constant((-(1.0 - a * a).sqrt()).atanh());
        boost_factor(&phj, &w).mul(&rot)
    };
    MatrixSpinor::from_matrix(prod.val.scale_re(sr))
}

// ---------------------------------------------------------------------------
// family construction
// ---------------------------------------------------------------------------

impl Family {
    pub fn build(cfg: &SolutionConfig) -> Result<Family> {
        let consts = cfg.constants;
        let kind = match &cfg.family {
            FamilySpec::FreeRest => FamilyKind::FreeRest,
            FamilySpec::GeneralAnsatz { f0, g0, decay } => {
                let (f0, g0, decay) = (*f0, *g0, *decay);
                if f0.abs() >= 1.0 {
                    return Err(Error::SuperluminalBoost { f: f0 });
                }
                FamilyKind::General {
                    f: Arc::new(move |_p| f0),
                    g: Arc::new(move |_p| g0),
                    sqrt_rho: Arc::new(move |p: &ChartPoint| {
                        let r2 = p.x[1] * p.x[1] + p.x[2] * p.x[2] + p.x[3] * p.x[3];
                        (-decay * r2 / 2.0).exp()
                    }),
                    eps: consts.m * consts.c * consts.c,
                    chart: Chart::cartesian(),
                }
            }
            FamilySpec::Planar2d { a, g_lin, g_log } => {
                let (a, g_lin, g_log) = (*a, *g_lin, *g_log);
                if !(0.0 < a && a < 1.0) {
                    return Err(Error::Config(format!("planar_2d requires 0 < a < 1, got {a}")));
                }
                let f = -(1.0 - a * a).sqrt();
                FamilyKind::General {
                    f: Arc::new(move |_p| f),
                    g: Arc::new(|_p| 0.0),
                    sqrt_rho: Arc::new(move |p: &ChartPoint| {
                        let rc = (p.x[1] * p.x[1] + p.x[2] * p.x[2]).sqrt();
                        (-(g_lin * rc + g_log * rc.ln()) / 2.0).exp()
                    }),
                    eps: consts.m * consts.c * consts.c / a,
                    chart: Chart::cartesian(),
                }
            }
            FamilySpec::Hydrogen { z, alpha, eps, profile, chart } => {
                let za = z * alpha;
                if !(0.0 < za && za < 1.0) {
                    return Err(Error::Config(format!(
                        "hydrogen requires 0 < Z*alpha < 1, got {za}"
                    )));
                }
                let eps_v = eps.unwrap_or_else(|| {
                    consts.m * consts.c * consts.c * (1.0 - za * za).sqrt()
                });
                let profiles = match profile {
                    HydrogenProfileSpec::Constant => RadialProfiles::ConstantX {
                        z_alpha: za,
                        consts,
                        g0: 0.0,
                    },
                    HydrogenProfileSpec::Ode { x0, g0, r0, r_span } => {
                        let (zc, ac, hc) = (*z, *alpha, consts);
                        let v = move |r: f64| zc * ac * hc.hbar * hc.c / r;
                        hydrogen_profiles(v, eps_v, &consts, *r0, *x0, *g0, *r_span)?
                    }
                };
                FamilyKind::Hydrogen(HydrogenField {
                    profiles,
                    eps: eps_v,
                    consts,
                    kappa: cfg.kappa,
                    chart: match chart {
                        Some(ChartKind::Cartesian) => Chart::cartesian(),
                        _ => Chart::spherical(),
                    },
                })
            }
            FamilySpec::ZeroBeta { a, eps, g_lin, g_log, chart } => {
                if !(0.0 < *a && *a < 1.0) {
                    return Err(Error::Config(format!("zero_beta requires 0 < a < 1, got {a}")));
                }
                FamilyKind::ZeroBeta(ZeroBetaField {
                    a: *a,
                    eps: *eps,
                    g_lin: *g_lin,
                    g_log: *g_log,
                    uniform_b: false,
                    consts,
                    kappa: cfg.kappa,
                    chart: match chart {
                        Some(ChartKind::Cartesian) => Chart::cartesian(),
                        _ => Chart::spherical(),
                    },
                })
            }
            FamilySpec::ZeroBetaUniformB { i_loop, mu0, r_loop } => {
                FamilyKind::ZeroBeta(ZeroBetaField {
                    a: 1.0,
                    eps: consts.m * consts.c * consts.c,
                    g_lin: i_loop * mu0 / (2.0 * r_loop * consts.hbar),
                    g_log: 0.0,
                    uniform_b: true,
                    consts,
                    kappa: cfg.kappa,
                    chart: Chart::spherical(),
                })
            }
            FamilySpec::ZeroBetaCoulombSolenoid {
                a,
                alpha_c,
                i_loop,
                mu0,
                r_loop,
            } => {
                if !(0.0 < *a && *a < 1.0) {
                    return Err(Error::Config(format!(
                        "coulomb_solenoid requires 0 < a < 1, got {a}"
                    )));
                }
                let sq = (1.0 - a * a).sqrt();
                // G = -(2 a alpha_c / sqrt(1-a^2)) ln(c m r / hbar)
                //     + 2 sqrt(1-a^2) c m r / hbar + a i mu0 r / (2 R hbar);
                // the ln(c m / hbar) offset only shifts kappa.
                let g_lin = 2.0 * sq * consts.c * consts.m / consts.hbar
                    + a * i_loop * mu0 / (2.0 * r_loop * consts.hbar);
                let g_log = -2.0 * a * alpha_c / sq;
                // eps chosen so the printed A_t = -alpha_c hbar / r holds
                let eps = a * consts.m * consts.c * consts.c
                    - sq * consts.c * i_loop * mu0 / (4.0 * r_loop);
                FamilyKind::ZeroBeta(ZeroBetaField {
                    a: *a,
                    eps,
                    g_lin,
                    g_log,
                    uniform_b: false,
                    consts,
                    kappa: cfg.kappa,
                    chart: Chart::spherical(),
                })
            }
            FamilySpec::RestFrameOf { inner } => {
                let inner_family = Family::build(inner)?;
                let bundle = rest_frame(&inner_family)?;
                FamilyKind::RestFrame(Box::new(bundle))
            }
        };
        Ok(Family {
            spec: cfg.family.clone(),
            consts,
            kappa: cfg.kappa,
            kind,
        })
    }

    pub fn chart(&self) -> Chart {
        match &self.kind {
            FamilyKind::FreeRest => Chart::cartesian(),
            FamilyKind::General { chart, .. } => *chart,
            FamilyKind::Hydrogen(h) => h.chart,
            FamilyKind::ZeroBeta(z) => z.chart,
            FamilyKind::RestFrame(b) => b.chart,
        }
    }

    pub fn spinor(&self) -> Box<dyn SpinorField + '_> {
        match &self.kind {
            FamilyKind::FreeRest => Box::new(FreeRestSpinor { consts: self.consts }),
            FamilyKind::General { f, g, sqrt_rho, eps, chart } => Box::new(GeneralSpinor {
                f: f.clone(),
                g: g.clone(),
                sqrt_rho: sqrt_rho.clone(),
                eps: *eps,
                consts: self.consts,
                chart: *chart,
            }),
            FamilyKind::Hydrogen(h) => Box::new(HydrogenSpinor(h.clone())),
            FamilyKind::ZeroBeta(z) => Box::new(ZeroBetaSpinor(z.clone())),
            FamilyKind::RestFrame(b) => Box::new(RestFramePsi {
                bundle_kind: b.source.clone(),
                chart: b.chart,
            }),
        }
    }

    /// The frame geometry in which this solution is verified: holonomic for
    /// lab-frame families, the rotor-transformed frame for rest_frame_of.
    pub fn geometry(&self) -> FrameGeometry {
        match &self.kind {
            FamilyKind::RestFrame(b) => b.geometry(),
            _ => FrameGeometry::holonomic(),
        }
    }

    pub fn hydrogen_field(&self) -> Option<&HydrogenField> {
        match &self.kind {
            FamilyKind::Hydrogen(h) => Some(h),
            _ => None,
        }
    }

    pub fn zero_beta_field(&self) -> Option<&ZeroBetaField> {
        match &self.kind {
            FamilyKind::ZeroBeta(z) => Some(z),
            _ => None,
        }
    }

    pub fn rest_frame_bundle(&self) -> Option<&RestFrameBundle> {
        match &self.kind {
            FamilyKind::RestFrame(b) => Some(b),
            _ => None,
        }
    }

    /// The potential of this solution as a field, obtained by running the
    /// inversion at each requested point.
    pub fn potential(self: &Arc<Self>, mode: DerivMode) -> PotentialField {
        let fam = Arc::clone(self);
        PotentialField::new(self.chart(), move |p| {
            Ok(fam.invert(p, mode)?.a_coord)
        })
    }

    /// Invert at one point with the family's natural geometry: the cartesian
    /// RDI on cartesian charts, the covariant form elsewhere.
    pub fn invert(&self, p: &ChartPoint, mode: DerivMode) -> Result<crate::inversion::Inversion> {
        let field = self.spinor();
        if self.chart().kind == ChartKind::Cartesian
            && !matches!(self.kind, FamilyKind::RestFrame(_))
        {
            invert_cartesian(field.as_ref(), &self.consts, p, mode)
        } else {
            let geom = self.geometry();
            invert_covariant(field.as_ref(), &geom, &self.consts, p, mode)
        }
    }
}

// ---------------------------------------------------------------------------
// rest frame
// ---------------------------------------------------------------------------

/// Everything defining the solution in the electron rest frame.
pub struct RestFrameBundle {
    pub chart: Chart,
    pub frame_rotor: RotorField,
    source: RestSource,
}

#[derive(Clone)]
enum RestSource {
    Hydrogen(HydrogenField),
    ZeroBeta(ZeroBetaField),
}

struct RestFramePsi {
    bundle_kind: RestSource,
    chart: Chart,
}

impl SpinorField for RestFramePsi {
    fn chart(&self) -> Chart {
        self.chart
    }
    fn psi(&self, p: &ChartPoint) -> CMat4 {
        match &self.bundle_kind {
            RestSource::Hydrogen(h) => h.rest_psi_jet(p).val,
            RestSource::ZeroBeta(z) => z.rest_psi_jet(p).val,
        }
    }
    fn dpsi_analytic(&self, p: &ChartPoint, mu: usize) -> Option<CMat4> {
        Some(match &self.bundle_kind {
            RestSource::Hydrogen(h) => h.rest_psi_jet(p).d[mu],
            RestSource::ZeroBeta(z) => z.rest_psi_jet(p).d[mu],
        })
    }
}

impl RestFrameBundle {
    pub fn geometry(&self) -> FrameGeometry {
        let rotor = self.frame_rotor.clone();
        FrameGeometry {
            tetrad: TetradField::FromRotor {
                rotor: self.frame_rotor.clone(),
                base: Box::new(TetradField::Holonomic),
            },
            omega: OmegaSource::Explicit(Box::new(move |p| {
                crate::geometry::rotor_frame_connection(&rotor, &SpinConnection::zero(), p)
            })),
        }
    }

    pub fn psi_rf(&self) -> Box<dyn SpinorField> {
        Box::new(RestFramePsi {
            bundle_kind: self.source.clone(),
            chart: self.chart,
        })
    }
}

/// Transform a solution to the electron rest frame: the rotor is replaced by
/// the identity (the phase stays), the tetrad is rotor-transformed and the
/// spin connection picks up the frame's acceleration.
pub fn rest_frame(sol: &Family) -> Result<RestFrameBundle> {
    match &sol.kind {
        FamilyKind::Hydrogen(h) => Ok(RestFrameBundle {
            chart: h.chart,
            frame_rotor: h.frame_rotor(),
            source: RestSource::Hydrogen(h.clone()),
        }),
        FamilyKind::ZeroBeta(z) => Ok(RestFrameBundle {
            chart: z.chart,
            frame_rotor: z.frame_rotor(),
            source: RestSource::ZeroBeta(z.clone()),
        }),
        _ => Err(Error::Config(
            "rest_frame is available for the hydrogen and zero-beta families".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// field strengths
// ---------------------------------------------------------------------------

/// Electric and magnetic fields plus the static current density, in the
/// chart's orthonormal physical components. The potential components are
/// taken as orthonormal-frame components (the convention under which the
/// printed closed-form fields follow); see the crate docs.
#[derive(Clone, Copy, Debug)]
pub struct FieldStrengths {
    pub e: [f64; 3],
    pub b: [f64; 3],
    pub j: [f64; 3],
}

/// E, B via the physical grad/curl of A; J via the curl of B (static case).
/// Both curls use fourth-order stencils; the outer (current) curl widens its
/// step so the noise of the inner differentiation stays below tolerance.
pub fn fields_from_potential(a: &PotentialField, p: &ChartPoint) -> Result<FieldStrengths> {
    let e = electric(a, p)?;
    let b = magnetic(a, p)?;
    let j = curl_of(&|q: &ChartPoint| magnetic(a, q), p, 3e-3)?;
    Ok(FieldStrengths { e, b, j })
}

fn electric(a: &PotentialField, p: &ChartPoint) -> Result<[f64; 3]> {
    // E = -grad(A_t) - d(A_vec)/d(x0), physical components
    let grad = physical_grad(&|q: &ChartPoint| Ok(a.a_coord(q)?[0]), p)?;
    let h = crate::geometry::fd_step(p.x[0]);
    let ap = a.a_coord(&p.shifted(0, h))?;
    let am = a.a_coord(&p.shifted(0, -h))?;
    let mut e = [0.0; 3];
    for k in 0..3 {
        e[k] = -grad[k] - (ap[k + 1] - am[k + 1]) / (2.0 * h);
    }
    Ok(e)
}

fn magnetic(a: &PotentialField, p: &ChartPoint) -> Result<[f64; 3]> {
    curl_of(
        &|q: &ChartPoint| {
            let av = a.a_coord(q)?;
            Ok([av[1], av[2], av[3]])
        },
        p,
        0.0,
    )
}

fn physical_grad(
    f: &dyn Fn(&ChartPoint) -> Result<f64>,
    p: &ChartPoint,
) -> Result<[f64; 3]> {
    let mut g = [0.0; 3];
    for k in 0..3 {
        let h = crate::geometry::fd_step(p.x[k + 1]);
        let d = (f(&p.shifted(k + 1, h))? - f(&p.shifted(k + 1, -h))?) / (2.0 * h);
        g[k] = d;
    }
    if p.chart.kind == ChartKind::Spherical {
        let (r, th) = (p.x[1], p.x[2]);
        g[1] /= r;
        g[2] /= r * th.sin();
    }
    Ok(g)
}

/// Curl of a spatial vector field given in physical components, returned in
/// physical components. `h_min` widens FD steps for nested differentiation.
fn curl_of(
    f: &dyn Fn(&ChartPoint) -> Result<[f64; 3]>,
    p: &ChartPoint,
    h_min: f64,
) -> Result<[f64; 3]> {
    let step = |mu: usize| crate::geometry::fd_step(p.x[mu]).max(h_min * p.x[mu].abs().max(1.0));
    // fourth-order five-point first derivative
    let d = |mu: usize, comp: usize| -> Result<f64> {
        let h = step(mu);
        let f1 = f(&p.shifted(mu, h))?[comp];
        let f1m = f(&p.shifted(mu, -h))?[comp];
        let f2 = f(&p.shifted(mu, 2.0 * h))?[comp];
        let f2m = f(&p.shifted(mu, -2.0 * h))?[comp];
        Ok((8.0 * (f1 - f1m) - (f2 - f2m)) / (12.0 * h))
    };
    match p.chart.kind {
        ChartKind::Cartesian => Ok([
            d(2, 2)? - d(3, 1)?,
            d(3, 0)? - d(1, 2)?,
            d(1, 1)? - d(2, 0)?,
        ]),
        ChartKind::Spherical => {
            let (r, th) = (p.x[1], p.x[2]);
            let (st, ct) = th.sin_cos();
            let v = f(p)?;
            // standard orthonormal spherical curl
            let b_r = (d(2, 2)? * st + v[2] * ct) / (r * st) - d(3, 1)? / (r * st);
            let b_th = d(3, 0)? / (r * st) - (v[2] / r + d(1, 2)?);
            let b_ph = v[1] / r + d(1, 1)? - d(2, 0)? / r;
            Ok([b_r, b_th, b_ph])
        }
    }
}

#[allow(unused_imports)]
use crate::spinor::polar; // doc reference
