//! Flat-spacetime charts, tetrads, spin connections and curved gamma matrices.
//!
//! Coordinates are (x0, x1, x2, x3) with x0 = ct; both shipped charts are flat
//! (cartesian and spherical), but every operation goes through the metric and
//! Christoffel data so nothing here assumes flatness structurally.

use crate::algebra::{mat4_inv, mat4_zero, CMat4, Mat4};
use crate::clifford::{gamma_lower, sigma_upper, tilde, ETA};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Cartesian,
    Spherical,
}

/// A chart plus its exclusion margins. The margins are data, not constants:
/// the zero-beta densities are singular on the polar axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub kind: ChartKind,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_theta_margin")]
    pub theta_margin: f64,
}

fn default_r_min() -> f64 {
    1e-6
}
fn default_theta_margin() -> f64 {
    1e-3
}

impl Chart {
    pub fn cartesian() -> Self {
        Chart {
            kind: ChartKind::Cartesian,
            r_min: default_r_min(),
            theta_margin: default_theta_margin(),
        }
    }

    pub fn spherical() -> Self {
        Chart {
            kind: ChartKind::Spherical,
            r_min: default_r_min(),
            theta_margin: default_theta_margin(),
        }
    }

    pub fn contains(&self, x: &[f64; 4]) -> bool {
        match self.kind {
            ChartKind::Cartesian => x.iter().all(|c| c.is_finite()),
            ChartKind::Spherical => {
                x.iter().all(|c| c.is_finite())
                    && x[1] > self.r_min
                    && x[2] >= self.theta_margin
                    && x[2] <= std::f64::consts::PI - self.theta_margin
            }
        }
    }

    pub fn point(&self, x: [f64; 4]) -> Result<ChartPoint> {
        if self.contains(&x) {
            Ok(ChartPoint { chart: *self, x })
        } else {
            Err(Error::DomainViolation {
                coords: x,
                reason: match self.kind {
                    ChartKind::Cartesian => "non-finite coordinates".into(),
                    ChartKind::Spherical => format!(
                        "spherical domain requires r > {:.1e}, theta in [{:.1e}, pi - {:.1e}]",
                        self.r_min, self.theta_margin, self.theta_margin
                    ),
                },
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub chart: Chart,
    pub x: [f64; 4],
}

impl ChartPoint {
    pub fn shifted(&self, mu: usize, h: f64) -> ChartPoint {
        let mut x = self.x;
        x[mu] += h;
        ChartPoint { chart: self.chart, x }
    }
}

/// FD step per the crate-wide convention h = 1e-5 * max(1, |coordinate|).
pub fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

/// Metric g_{mu nu} and Christoffel symbols Gamma^sigma_{alpha nu} of the chart.
pub fn metric_and_christoffels(p: &ChartPoint) -> Result<(Mat4, [[[f64; 4]; 4]; 4])> {
    if !p.chart.contains(&p.x) {
        return Err(Error::DomainViolation {
            coords: p.x,
            reason: "outside chart domain".into(),
        });
    }
    match p.chart.kind {
        ChartKind::Cartesian => {
            let mut g = mat4_zero();
            for i in 0..4 {
                g[i][i] = ETA[i];
            }
            Ok((g, [[[0.0; 4]; 4]; 4]))
        }
        ChartKind::Spherical => {
            let (r, th) = (p.x[1], p.x[2]);
            let (st, ct) = th.sin_cos();
            let mut g = mat4_zero();
            g[0][0] = 1.0;
            g[1][1] = -1.0;
            g[2][2] = -r * r;
            g[3][3] = -(r * st) * (r * st);
            let mut ga = [[[0.0; 4]; 4]; 4];
            ga[2][2][1] = 1.0 / r;
            ga[2][1][2] = 1.0 / r;
            ga[3][3][1] = 1.0 / r;
            ga[3][1][3] = 1.0 / r;
            ga[1][2][2] = -r;
            ga[1][3][3] = -r * st * st;
            ga[3][3][2] = ct / st;
            ga[3][2][3] = ct / st;
            ga[2][3][3] = -ct * st;
            Ok((g, ga))
        }
    }
}

pub fn sqrt_abs_det_g(p: &ChartPoint) -> f64 {
    match p.chart.kind {
        ChartKind::Cartesian => 1.0,
        ChartKind::Spherical => p.x[1] * p.x[1] * p.x[2].sin().abs(),
    }
}

/// Tetrad evaluated at a point: e_down[a][mu] = e^a_mu, e_up[mu][a] = e^mu_a.
#[derive(Clone, Copy, Debug)]
pub struct Tetrad {
    pub e_down: Mat4,
    pub e_up: Mat4,
}

impl Tetrad {
    pub fn from_down(e_down: Mat4) -> Self {
        Tetrad {
            e_down,
            e_up: mat4_inv(&e_down),
        }
    }

    pub fn from_up(e_up: Mat4) -> Self {
        Tetrad {
            e_down: mat4_inv(&e_up),
            e_up,
        }
    }

    /// eta_ab e^a_mu e^b_nu, should equal g_{mu nu}.
    pub fn induced_metric(&self) -> Mat4 {
        let mut g = mat4_zero();
        for mu in 0..4 {
            for nu in 0..4 {
                for a in 0..4 {
                    g[mu][nu] += ETA[a] * self.e_down[a][mu] * self.e_down[a][nu];
                }
            }
        }
        g
    }
}

type RotorEval = Arc<dyn Fn(&ChartPoint) -> CMat4 + Send + Sync>;
type RotorPartial = Arc<dyn Fn(&ChartPoint, usize) -> CMat4 + Send + Sync>;

/// A rotor-valued field with an optional registered analytic derivative.
#[derive(Clone)]
pub struct RotorField {
    eval: RotorEval,
    partial: Option<RotorPartial>,
}

impl RotorField {
    pub fn new(eval: impl Fn(&ChartPoint) -> CMat4 + Send + Sync + 'static) -> Self {
        RotorField {
            eval: Arc::new(eval),
            partial: None,
        }
    }

    pub fn with_partial(
        mut self,
        partial: impl Fn(&ChartPoint, usize) -> CMat4 + Send + Sync + 'static,
    ) -> Self {
        self.partial = Some(Arc::new(partial));
        self
    }

    pub fn at(&self, p: &ChartPoint) -> CMat4 {
        (self.eval)(p)
    }

    pub fn partial(&self, p: &ChartPoint, mu: usize) -> CMat4 {
        if let Some(dp) = &self.partial {
            dp(p, mu)
        } else {
            let h = fd_step(p.x[mu]);
            (self.at(&p.shifted(mu, h)) - self.at(&p.shifted(mu, -h))).scale_re(0.5 / h)
        }
    }

    pub fn check_unimodular(&self, p: &ChartPoint) -> Result<()> {
        let r = self.at(p);
        let dev = (r * tilde(&r) - CMat4::identity()).max_abs();
        if dev > 1e-10 {
            Err(Error::NonUnimodularRotor { deviation: dev })
        } else {
            Ok(())
        }
    }
}

/// A tetrad field over the chart. `Holonomic` is the coordinate-Jacobian
/// ("cartesian gauge") tetrad, whose spin connection vanishes on both charts.
#[derive(Clone)]
pub enum TetradField {
    Holonomic,
    /// Rotor-transformed frame e'^mu_a = 1/4 Tr(R^-1 gamma^mu R gamma_a)
    /// over a base tetrad.
    FromRotor {
        rotor: RotorField,
        base: Box<TetradField>,
    },
}

impl TetradField {
    pub fn at(&self, p: &ChartPoint) -> Result<Tetrad> {
        match self {
            TetradField::Holonomic => holonomic_tetrad(p),
            TetradField::FromRotor { rotor, base } => {
                let b = base.at(p)?;
                tetrad_from_rotor(rotor, &b, p)
            }
        }
    }

    /// d/dx^mu of e^a_nu; the holonomic tetrads carry their closed-form
    /// derivatives, rotor frames fall back to central differences.
    pub fn partial_down(&self, p: &ChartPoint, mu: usize) -> Result<Mat4> {
        if let TetradField::Holonomic = self {
            return match p.chart.kind {
                ChartKind::Cartesian => Ok(mat4_zero()),
                ChartKind::Spherical => Ok(spherical_tetrad_partial(p.x[1], p.x[2], p.x[3], mu)),
            };
        }
        let h = fd_step(p.x[mu]);
        let ep = self.at(&p.shifted(mu, h))?;
        let em = self.at(&p.shifted(mu, -h))?;
        let mut out = mat4_zero();
        for a in 0..4 {
            for nu in 0..4 {
                out[a][nu] = (ep.e_down[a][nu] - em.e_down[a][nu]) / (2.0 * h);
            }
        }
        Ok(out)
    }
}

fn holonomic_tetrad(p: &ChartPoint) -> Result<Tetrad> {
    if !p.chart.contains(&p.x) {
        return Err(Error::DomainViolation {
            coords: p.x,
            reason: "outside chart domain".into(),
        });
    }
    match p.chart.kind {
        ChartKind::Cartesian => {
            let mut e = mat4_zero();
            for i in 0..4 {
                e[i][i] = 1.0;
            }
            Ok(Tetrad { e_down: e, e_up: e })
        }
        ChartKind::Spherical => Ok(spherical_tetrad_at(p.x[1], p.x[2], p.x[3])),
    }
}

/// The cartesian-gauge spherical tetrad: e^a_mu is the Jacobian of the
/// coordinate change to cartesian, so its spin connection is identically zero.
pub fn spherical_tetrad(p: &ChartPoint) -> Result<Tetrad> {
    match p.chart.kind {
        ChartKind::Spherical => holonomic_tetrad(p),
        ChartKind::Cartesian => Err(Error::DomainViolation {
            coords: p.x,
            reason: "spherical tetrad requested on cartesian chart".into(),
        }),
    }
}

fn spherical_tetrad_at(r: f64, th: f64, ph: f64) -> Tetrad {
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    let mut e = mat4_zero();
    e[0][0] = 1.0;
    e[1][1] = cp * st;
    e[2][1] = sp * st;
    e[3][1] = ct;
    e[1][2] = r * ct * cp;
    e[2][2] = r * ct * sp;
    e[3][2] = -r * st;
    e[1][3] = -r * sp * st;
    e[2][3] = r * cp * st;
    // exact inverse (dual components as printed)
    let mut u = mat4_zero();
    u[0][0] = 1.0;
    u[1][1] = cp * st;
    u[1][2] = sp * st;
    u[1][3] = ct;
    u[2][1] = ct * cp / r;
    u[2][2] = ct * sp / r;
    u[2][3] = -st / r;
    u[3][1] = -sp / (r * st);
    u[3][2] = cp / (r * st);
    Tetrad { e_down: e, e_up: u }
}

/// Closed-form d(e^a_nu)/d(x^mu) of the spherical holonomic tetrad.
fn spherical_tetrad_partial(r: f64, th: f64, ph: f64, mu: usize) -> Mat4 {
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    let mut d = mat4_zero();
    match mu {
        1 => {
            // d/dr: only the theta and phi columns carry r
            d[1][2] = ct * cp;
            d[2][2] = ct * sp;
            d[3][2] = -st;
            d[1][3] = -sp * st;
            d[2][3] = cp * st;
        }
        2 => {
            d[1][1] = cp * ct;
            d[2][1] = sp * ct;
            d[3][1] = -st;
            d[1][2] = -r * st * cp;
            d[2][2] = -r * st * sp;
            d[3][2] = -r * ct;
            d[1][3] = -r * sp * ct;
            d[2][3] = r * cp * ct;
        }
        3 => {
            d[1][1] = -sp * st;
            d[2][1] = cp * st;
            d[1][2] = -r * ct * sp;
            d[2][2] = r * ct * cp;
            d[1][3] = -r * cp * st;
            d[2][3] = -r * sp * st;
        }
        _ => {}
    }
    d
}

/// Spin connection coefficients, antisymmetric pair lowered: Omega_{ij mu}.
#[derive(Clone, Copy, Debug)]
pub struct SpinConnection {
    pub omega: [[[f64; 4]; 4]; 4],
}

impl SpinConnection {
    pub fn zero() -> Self {
        SpinConnection {
            omega: [[[0.0; 4]; 4]; 4],
        }
    }

    /// Omega_mu = 1/2 Omega_{ij mu} sigma^{ij} as a matrix.
    pub fn matrix(&self, mu: usize) -> CMat4 {
        let mut out = CMat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                let w = self.omega[i][j][mu];
                if w != 0.0 {
                    out += sigma_upper(i, j).scale_re(0.5 * w);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for mu in 0..4 {
                    worst = worst.max(self.omega[i][j][mu].abs());
                }
            }
        }
        worst
    }
}

/// Project an even matrix O = 1/2 W_{ij} sigma^{ij} back onto its components:
/// W_{ab} = -Tr(O sigma_ab) (real part; the imaginary part is a consistency
/// residue for the caller to check).
pub fn project_half_sigma(o: &CMat4) -> [[f64; 4]; 4] {
    let mut w = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            w[a][b] = -o.trace_mul(&crate::clifford::sigma(a, b)).re;
        }
    }
    w
}

/// Omega^i_{j mu} = e^nu_j e^i_sigma (Gamma^sigma_{nu mu} - e^sigma_a d_mu e^a_nu),
/// returned with the first index lowered.
pub fn spin_connection(tet: &TetradField, p: &ChartPoint) -> Result<SpinConnection> {
    let (_, christoffel) = metric_and_christoffels(p)?;
    let t = tet.at(p)?;
    let de: [Mat4; 4] = [
        tet.partial_down(p, 0)?,
        tet.partial_down(p, 1)?,
        tet.partial_down(p, 2)?,
        tet.partial_down(p, 3)?,
    ];
    let mut omega = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for mu in 0..4 {
                let mut val = 0.0;
                for nu in 0..4 {
                    for sg in 0..4 {
                        let mut inner = christoffel[sg][nu][mu];
                        for a in 0..4 {
                            inner -= t.e_up[sg][a] * de[mu][a][nu];
                        }
                        val += t.e_up[nu][j] * t.e_down[i][sg] * inner;
                    }
                }
                omega[i][j][mu] = val; // upper i for now
            }
        }
    }
    // lower the first index
    let mut lowered = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for mu in 0..4 {
                lowered[i][j][mu] = ETA[i] * omega[i][j][mu];
            }
        }
    }
    // enforce exact antisymmetry of the stored coefficients
    for i in 0..4 {
        for j in 0..4 {
            for mu in 0..4 {
                let asym = 0.5 * (lowered[i][j][mu] - lowered[j][i][mu]);
                lowered[i][j][mu] = asym;
                lowered[j][i][mu] = -asym;
            }
        }
    }
    Ok(SpinConnection { omega: lowered })
}

/// Curved gamma matrices gamma_mu = e^a_mu gamma_a and gamma^mu = e^mu_a gamma^a.
pub struct CurvedGammas {
    pub lower: [CMat4; 4],
    pub upper: [CMat4; 4],
}

pub fn curved_gamma(tet: &Tetrad) -> CurvedGammas {
    let mut lower = [CMat4::zero(); 4];
    let mut upper = [CMat4::zero(); 4];
    for mu in 0..4 {
        for a in 0..4 {
            if tet.e_down[a][mu] != 0.0 {
                lower[mu] += gamma_lower(a).scale_re(tet.e_down[a][mu]);
            }
            if tet.e_up[mu][a] != 0.0 {
                upper[mu] += crate::clifford::gamma_upper(a).scale_re(tet.e_up[mu][a]);
            }
        }
    }
    CurvedGammas { lower, upper }
}

/// Max-norm of d_mu gamma_nu + [Omega_mu, gamma_nu] - Gamma^sigma_{nu mu} gamma_sigma
/// over all (mu, nu); near zero for a consistent (tetrad, connection) pair.
pub fn metricity_residual(
    tet: &TetradField,
    conn: &SpinConnection,
    p: &ChartPoint,
) -> Result<f64> {
    let (_, christoffel) = metric_and_christoffels(p)?;
    let gammas_at = |q: &ChartPoint| -> Result<[CMat4; 4]> {
        Ok(curved_gamma(&tet.at(q)?).lower)
    };
    let g0 = gammas_at(p)?;
    let mut worst: f64 = 0.0;
    for mu in 0..4 {
        let h = fd_step(p.x[mu]);
        let gp = gammas_at(&p.shifted(mu, h))?;
        let gm = gammas_at(&p.shifted(mu, -h))?;
        let om = conn.matrix(mu);
        for nu in 0..4 {
            let dg = (gp[nu] - gm[nu]).scale_re(0.5 / h);
            let mut res = dg + om * g0[nu] - g0[nu] * om;
            for sg in 0..4 {
                let c = christoffel[sg][nu][mu];
                if c != 0.0 {
                    res = res - g0[sg].scale_re(c);
                }
            }
            worst = worst.max(res.max_abs());
        }
    }
    Ok(worst)
}

/// New tetrad from a rotor field: e'^mu_a = 1/4 Tr(R^-1 gamma^mu R gamma_a).
/// With the spinor's own rotor this is the frame in which the velocity is
/// (1,0,0,0).
pub fn tetrad_from_rotor(rotor: &RotorField, base: &Tetrad, p: &ChartPoint) -> Result<Tetrad> {
    rotor.check_unimodular(p)?;
    let r = rotor.at(p);
    let ri = tilde(&r);
    let cg = curved_gamma(base);
    let mut e_up = mat4_zero();
    for mu in 0..4 {
        for a in 0..4 {
            e_up[mu][a] = ((ri * cg.upper[mu] * r * gamma_lower(a)).trace() / 4.0).re;
        }
    }
    Ok(Tetrad::from_up(e_up))
}

/// Spin connection of a rotor-transformed frame over a base with connection
/// `base_conn`: Omega'_mu = Lambda (Omega_mu - Lambda^-1 d_mu Lambda) Lambda^-1
/// with Lambda = R^-1.
pub fn rotor_frame_connection(
    rotor: &RotorField,
    base_conn: &SpinConnection,
    p: &ChartPoint,
) -> Result<SpinConnection> {
    let r = rotor.at(p);
    let ri = tilde(&r);
    let mut omega = [[[0.0; 4]; 4]; 4];
    for mu in 0..4 {
        let dr = rotor.partial(p, mu);
        // d_mu(R^-1) = tilde(d_mu R)
        let dri = tilde(&dr);
        // Lambda^-1 d Lambda = R d(R^-1)
        let om_new = ri * base_conn.matrix(mu) * r - dri * r;
        let w = project_half_sigma(&om_new);
        let imag = {
            let mut rebuilt = CMat4::zero();
            for i in 0..4 {
                for j in 0..4 {
                    rebuilt += sigma_upper(i, j).scale_re(0.5 * w[i][j]);
                }
            }
            (om_new - rebuilt).max_abs()
        };
        if imag > 1e-8 {
            return Err(Error::NonRotor { residue: imag });
        }
        for i in 0..4 {
            for j in 0..4 {
                omega[i][j][mu] = w[i][j];
            }
        }
    }
    Ok(SpinConnection { omega })
}


#[cfg(test)]
mod tetrad_partial_tests {
    use super::*;

    #[test]
    fn analytic_tetrad_partials_match_fd() {
        let p = Chart::spherical().point([0.0, 1.7, 0.9, 2.3]).unwrap();
        for mu in 0..4 {
            let analytic = TetradField::Holonomic.partial_down(&p, mu).unwrap();
            let h = fd_step(p.x[mu]);
            let ep = TetradField::Holonomic.at(&p.shifted(mu, h)).unwrap();
            let em = TetradField::Holonomic.at(&p.shifted(mu, -h)).unwrap();
            for a in 0..4 {
                for nu in 0..4 {
                    let fd = (ep.e_down[a][nu] - em.e_down[a][nu]) / (2.0 * h);
                    assert!(
                        (analytic[a][nu] - fd).abs() < 1e-8,
                        "mu={mu} a={a} nu={nu}: {} vs {fd}",
                        analytic[a][nu]
                    );
                }
            }
        }
    }

    #[test]
    fn spin_connection_now_vanishes_to_machine_precision() {
        let p = Chart::spherical().point([0.0, 2.4, 1.2, 5.1]).unwrap();
        let c = spin_connection(&TetradField::Holonomic, &p).unwrap();
        assert!(c.max_abs() < 1e-13, "{}", c.max_abs());
    }
}
