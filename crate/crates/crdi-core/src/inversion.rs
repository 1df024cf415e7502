//! The inversion core: given a matrix-spinor field, recover the momentum
//! field and the electromagnetic potential that make the Dirac equation hold,
//! by two independent routes that must agree.

use crate::algebra::{C64, CMat4, Mat4};
use crate::clifford::{
    epsilon, epsilon_upper, exp_ibold, gamma_lower, gamma_upper, ibold, sigma, sigma_upper, tilde,
    ETA,
};
use crate::error::{Error, Result};
use crate::geometry::{
    curved_gamma, fd_step, metric_and_christoffels, sqrt_abs_det_g, Chart, ChartPoint,
    SpinConnection, Tetrad, TetradField,
};
use crate::spinor::singularity_threshold;

/// Physical constants; natural units by default. The charge q is carried
/// through the formulas exactly as printed.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysConsts {
    pub hbar: f64,
    pub c: f64,
    pub m: f64,
    pub q: f64,
}

impl Default for PhysConsts {
    fn default() -> Self {
        PhysConsts {
            hbar: 1.0,
            c: 1.0,
            m: 1.0,
            q: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivMode {
    Analytic,
    Fd,
}

impl DerivMode {
    /// Cross-path agreement tolerance tier for this derivative mode.
    pub fn cross_path_tol(&self) -> f64 {
        match self {
            DerivMode::Analytic => 1e-8,
            DerivMode::Fd => 1e-5,
        }
    }
}

/// A matrix-spinor field over a chart. Families implement `dpsi_analytic`;
/// anything can be differentiated by central differences.
pub trait SpinorField: Send + Sync {
    fn chart(&self) -> Chart;

    fn psi(&self, p: &ChartPoint) -> CMat4;

    fn dpsi_analytic(&self, _p: &ChartPoint, _mu: usize) -> Option<CMat4> {
        None
    }

    fn dpsi(&self, p: &ChartPoint, mu: usize, mode: DerivMode) -> CMat4 {
        if mode == DerivMode::Analytic {
            if let Some(d) = self.dpsi_analytic(p, mu) {
                return d;
            }
        }
        let h = fd_step(p.x[mu]);
        (self.psi(&p.shifted(mu, h)) - self.psi(&p.shifted(mu, -h))).scale_re(0.5 / h)
    }

    /// Value and all four partials in one pass; families override this with
    /// a single product-rule sweep.
    fn psi_jet(&self, p: &ChartPoint, mode: DerivMode) -> (CMat4, [CMat4; 4]) {
        (
            self.psi(p),
            [
                self.dpsi(p, 0, mode),
                self.dpsi(p, 1, mode),
                self.dpsi(p, 2, mode),
                self.dpsi(p, 3, mode),
            ],
        )
    }
}

/// Frame data for covariant operations: tetrad field plus the spin connection
/// of that frame. Both shipped holonomic tetrads have zero connection.
pub struct FrameGeometry {
    pub tetrad: TetradField,
    pub omega: OmegaSource,
}

pub enum OmegaSource {
    Zero,
    /// Connection obtained numerically from the tetrad field (metricity).
    OfTetrad,
    /// Closed-form connection supplied by the caller.
    Explicit(Box<dyn Fn(&ChartPoint) -> Result<SpinConnection> + Send + Sync>),
}

impl FrameGeometry {
    pub fn holonomic() -> Self {
        FrameGeometry {
            tetrad: TetradField::Holonomic,
            omega: OmegaSource::Zero,
        }
    }

    pub fn omega_at(&self, p: &ChartPoint) -> Result<SpinConnection> {
        match &self.omega {
            OmegaSource::Zero => Ok(SpinConnection::zero()),
            OmegaSource::OfTetrad => crate::geometry::spin_connection(&self.tetrad, p),
            OmegaSource::Explicit(f) => f(p),
        }
    }
}

/// Polar data of the field at a point together with the exact first
/// derivatives of every piece, all obtained by chain rule from (psi, dpsi).
/// The cached polar data of any `MatrixSpinor` is never consulted here:
/// verification recomputes everything from the matrix itself.
pub struct PolarJet {
    pub psi: CMat4,
    pub dpsi: [CMat4; 4],
    pub rho: f64,
    pub beta: f64,
    pub rotor: CMat4,
    pub drho: [f64; 4],
    pub dbeta: [f64; 4],
    pub drotor: [CMat4; 4],
    /// Contravariant tangent components.
    pub v: [f64; 4],
    pub s: [f64; 4],
    pub dv: [[f64; 4]; 4],
    pub ds: [[f64; 4]; 4],
    pub e1: CMat4,
    pub e2: CMat4,
    pub de1: [CMat4; 4],
}

impl PolarJet {
    pub fn compute(field: &dyn SpinorField, p: &ChartPoint, mode: DerivMode) -> Result<PolarJet> {
        let (psi, dpsi) = field.psi_jet(p, mode);
        Self::from_jet(psi, dpsi, p)
    }

    pub fn from_jet(psi: CMat4, dpsi: [CMat4; 4], p: &ChartPoint) -> Result<PolarJet> {
        let psit = tilde(&psi);
        let k = psi * psit;
        let rc = (k.trace() / 4.0).re;
        let rs = -(ibold().trace_mul(&k) / 4.0).re;
        let rho = rc.hypot(rs);
        let thresh = singularity_threshold(&psi);
        if rho <= thresh {
            return Err(Error::SingularSpinor {
                point: p.x,
                rho,
                threshold: thresh,
            });
        }
        let beta = rs.atan2(rc);
        let rotor = (psi * exp_ibold(-beta / 2.0)).scale_re(1.0 / rho.sqrt());

        let mut drho = [0.0; 4];
        let mut dbeta = [0.0; 4];
        let mut drotor = [CMat4::zero(); 4];
        let mut v = [0.0; 4];
        let mut s = [0.0; 4];
        let mut dv = [[0.0; 4]; 4];
        let mut ds = [[0.0; 4]; 4];

        let vsl = psi * gamma_lower(0) * psit;
        let ssl = psi * gamma_lower(3) * psit;
        for a in 0..4 {
            v[a] = (gamma_upper(a).trace_mul(&vsl) / 4.0).re / rho;
            s[a] = (gamma_upper(a).trace_mul(&ssl) / 4.0).re / rho;
        }

        for mu in 0..4 {
            let dpsit = tilde(&dpsi[mu]);
            let dk = dpsi[mu] * psit + psi * dpsit;
            let drc = (dk.trace() / 4.0).re;
            let drs = -(ibold().trace_mul(&dk) / 4.0).re;
            drho[mu] = (rc * drc + rs * drs) / rho;
            dbeta[mu] = (rc * drs - rs * drc) / (rho * rho);
            // d rotor = (dpsi - (drho/2rho) psi) e^{-i beta/2} / sqrt(rho)
            //           - (dbeta/2) ibold rotor
            drotor[mu] = (dpsi[mu] - psi.scale_re(drho[mu] / (2.0 * rho)))
                * exp_ibold(-beta / 2.0).scale_re(1.0 / rho.sqrt())
                - (ibold() * rotor).scale_re(dbeta[mu] / 2.0);
            let dvsl = dpsi[mu] * gamma_lower(0) * psit + psi * gamma_lower(0) * dpsit;
            let dssl = dpsi[mu] * gamma_lower(3) * psit + psi * gamma_lower(3) * dpsit;
            for a in 0..4 {
                let dpv = (gamma_upper(a).trace_mul(&dvsl) / 4.0).re;
                let dps = (gamma_upper(a).trace_mul(&dssl) / 4.0).re;
                dv[mu][a] = (dpv - v[a] * drho[mu]) / rho;
                ds[mu][a] = (dps - s[a] * drho[mu]) / rho;
            }
        }

        let e1 = (psi * gamma_lower(1) * psit).scale_re(1.0 / rho);
        let e2 = (psi * gamma_lower(2) * psit).scale_re(1.0 / rho);
        let mut de1 = [CMat4::zero(); 4];
        for mu in 0..4 {
            let dpsit = tilde(&dpsi[mu]);
            de1[mu] = (dpsi[mu] * gamma_lower(1) * psit + psi * gamma_lower(1) * dpsit
                - e1.scale_re(drho[mu]))
            .scale_re(1.0 / rho);
        }

        Ok(PolarJet {
            psi,
            dpsi,
            rho,
            beta,
            rotor,
            drho,
            dbeta,
            drotor,
            v,
            s,
            dv,
            ds,
            e1,
            e2,
            de1,
        })
    }

    /// Psi^-1 from the polar data.
    pub fn psi_inverse(&self) -> CMat4 {
        (tilde(&self.psi) * exp_ibold(-self.beta)).scale_re(1.0 / self.rho)
    }
}

/// R_{ij mu} with derived contractions R_mu and B_mu (tangent components).
#[derive(Clone, Copy, Debug)]
pub struct RTensor {
    /// R[i][j][mu], antisymmetric in (i, j); mu is a chart index.
    pub r: [[[f64; 4]; 4]; 4],
    /// Worst forbidden (non-sigma or imaginary) projection encountered.
    pub residue: f64,
}

impl RTensor {
    /// R_a = R_{ab}^{  b} in tangent components: contract the second pair
    /// slot with the (tetrad-converted) derivative slot.
    pub fn r_vector(&self, tet: &Tetrad) -> [f64; 4] {
        let mut out = [0.0; 4];
        let rt = self.tangent(tet);
        for a in 0..4 {
            for b in 0..4 {
                out[a] += ETA[b] * rt[a][b][b];
            }
        }
        out
    }

    /// B_a = 1/2 eps_{a b c d} R^{bcd} in tangent components.
    pub fn b_vector(&self, tet: &Tetrad) -> [f64; 4] {
        let rt = self.tangent(tet);
        let mut up = [[[0.0; 4]; 4]; 4];
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    up[b][c][d] = ETA[b] * ETA[c] * ETA[d] * rt[b][c][d];
                }
            }
        }
        let mut out = [0.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let e = epsilon(a, b, c, d);
                        if e != 0.0 {
                            out[a] += 0.5 * e * up[b][c][d];
                        }
                    }
                }
            }
        }
        out
    }

    /// All-tangent components R_{abc} = R_{ab mu} e^mu_c.
    pub fn tangent(&self, tet: &Tetrad) -> [[[f64; 4]; 4]; 4] {
        let mut out = [[[0.0; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for mu in 0..4 {
                        out[a][b][c] += self.r[a][b][mu] * tet.e_up[mu][c];
                    }
                }
            }
        }
        out
    }
}

/// Extract R_{ij mu} from 2 R d_mu R^-1 - Omega_{ij mu} sigma^{ij} by
/// projecting onto the sigma basis. A non-vanishing gamma5/scalar/vector part
/// signals a non-rotor field.
pub fn r_tensor(jet: &PolarJet, conn: &SpinConnection) -> Result<RTensor> {
    let mut r = [[[0.0; 4]; 4]; 4];
    let mut residue: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for mu in 0..4 {
        let drinv = tilde(&jet.drotor[mu]);
        // conn.matrix is 1/2 Omega_{ij mu} sigma^{ij}, so subtract twice of it
        let m = (jet.rotor * drinv).scale_re(2.0) - conn.matrix(mu).scale_re(2.0);
        for a in 0..4 {
            for b in 0..4 {
                r[a][b][mu] = -0.5 * m.trace_mul(&sigma(a, b)).re;
            }
        }
        // M = R_{ij mu} sigma^{ij} summed over both index orders
        let mut rebuilt = CMat4::zero();
        for a in 0..4 {
            for b in 0..4 {
                rebuilt += sigma_upper(a, b).scale_re(r[a][b][mu]);
            }
        }
        residue = residue.max((m - rebuilt).max_abs());
        scale = scale.max(m.max_abs());
    }
    if residue > 1e-8 * (1.0 + scale) {
        return Err(Error::NonRotor { residue });
    }
    Ok(RTensor { r, residue })
}

/// Result of an inversion at one point.
#[derive(Clone, Copy, Debug)]
pub struct Inversion {
    /// Momentum field P_a = q(d_a xi - A_a) with the gauge convention
    /// xi = 0, i.e. P_a = -q A_a. Tangent components.
    pub p_tangent: [f64; 4],
    /// Covariant potential, tangent components A_a.
    pub a_tangent: [f64; 4],
    /// Covariant potential, chart components A_mu = e^a_mu A_a.
    pub a_coord: [f64; 4],
    /// Disagreement between the two computation routes.
    pub cross_path: f64,
    /// Largest imaginary residue of the projected components.
    pub imag_residue: f64,
}

/// A potential field over the chart, covariant coordinate components.
pub struct PotentialField {
    pub chart: Chart,
    eval: Box<dyn Fn(&ChartPoint) -> Result<[f64; 4]> + Send + Sync>,
}

impl PotentialField {
    pub fn new(
        chart: Chart,
        eval: impl Fn(&ChartPoint) -> Result<[f64; 4]> + Send + Sync + 'static,
    ) -> Self {
        PotentialField {
            chart,
            eval: Box::new(eval),
        }
    }

    pub fn a_coord(&self, p: &ChartPoint) -> Result<[f64; 4]> {
        (self.eval)(p)
    }
}

/// Matrix route: qA-slash = gamma^mu (hbar d_mu ln sqrt(rho)
///   + hbar ibold d_mu beta / 2 - hbar/2 R_{ij mu} sigma^{ij}) Psi g^2 g^1 Psi^-1
///   - mc Psi g^0 Psi^-1,
/// projected on the tangent gammas. Returns (A_a, imag residue).
pub fn matrix_route(
    jet: &PolarJet,
    rt: &RTensor,
    tet: &Tetrad,
    consts: &PhysConsts,
) -> ([f64; 4], f64) {
    let (a, imag, _) = matrix_route_full(jet, rt, tet, consts);
    (a, imag)
}

fn matrix_route_full(
    jet: &PolarJet,
    rt: &RTensor,
    tet: &Tetrad,
    consts: &PhysConsts,
) -> ([f64; 4], f64, CMat4) {
    let cg = curved_gamma(tet);
    let hbar = consts.hbar;
    let mut op = CMat4::zero();
    for mu in 0..4 {
        let mut inner = CMat4::identity().scale_re(hbar * jet.drho[mu] / (2.0 * jet.rho))
            + ibold().scale_re(hbar * jet.dbeta[mu] / 2.0);
        for i in 0..4 {
            for j in 0..4 {
                let rr = rt.r[i][j][mu];
                if rr != 0.0 {
                    inner = inner - sigma_upper(i, j).scale_re(hbar * rr / 2.0);
                }
            }
        }
        op += cg.upper[mu] * inner;
    }
    let psi_inv = jet.psi_inverse();
    let asl = op * jet.psi * gamma_upper(2) * gamma_upper(1) * psi_inv
        - (jet.psi * gamma_upper(0) * psi_inv).scale_re(consts.m * consts.c);
    let (a, imag) = project_vector(&asl, consts.q);
    (a, imag, asl)
}

/// The twelve forbidden Gamma-basis projections of eA-slash must vanish for
/// the potential to be a real vector.
fn check_purity(
    asl: &CMat4,
    consts: &PhysConsts,
    mode: DerivMode,
    p: &ChartPoint,
) -> Result<()> {
    let purity = purity_projections(asl);
    let scale = asl.max_abs().max(consts.m * consts.c);
    let tol = match mode {
        DerivMode::Analytic => 1e-8,
        DerivMode::Fd => 1e-5,
    };
    let (worst_slot, worst) = purity
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap();
    if worst > tol * scale {
        return Err(Error::ConstraintViolation {
            point: p.x,
            worst: worst / scale,
            slot: if worst_slot == 0 { 1 } else { worst_slot + 5 },
        });
    }
    Ok(())
}

fn project_vector(asl: &CMat4, q: f64) -> ([f64; 4], f64) {
    let mut a = [0.0; 4];
    let mut imag: f64 = 0.0;
    for idx in 0..4 {
        let c = gamma_lower(idx).trace_mul(asl) / 4.0;
        a[idx] = c.re / q;
        imag = imag.max(c.im.abs());
    }
    (a, imag)
}

/// Component route (the covariant generalization of the RDI component
/// formulas): P^d = mc cos(beta) v^d
///   + hbar/2 [ (B - dbeta).v s^d - (B - dbeta).s v^d
///              - (dlnrho + R)_a s_b v_c eps^{abcd} ],
/// with all contractions in tangent components. Returns A_a = -eta_{ad} P^d / q.
pub fn component_route(
    jet: &PolarJet,
    rt: &RTensor,
    tet: &Tetrad,
    consts: &PhysConsts,
) -> [f64; 4] {
    let ra = rt.r_vector(tet);
    let ba = rt.b_vector(tet);
    // tangent-projected gradients: d_a f = e^mu_a d_mu f
    let mut dbeta_t = [0.0; 4];
    let mut dlnrho_t = [0.0; 4];
    for a in 0..4 {
        for mu in 0..4 {
            dbeta_t[a] += tet.e_up[mu][a] * jet.dbeta[mu];
            dlnrho_t[a] += tet.e_up[mu][a] * jet.drho[mu] / jet.rho;
        }
    }
    let mut t1 = 0.0; // (B - dbeta)_a v^a
    let mut t2 = 0.0; // (B - dbeta)_a s^a
    for a in 0..4 {
        t1 += (ba[a] - dbeta_t[a]) * jet.v[a];
        t2 += (ba[a] - dbeta_t[a]) * jet.s[a];
    }
    let s_lo: [f64; 4] = std::array::from_fn(|i| ETA[i] * jet.s[i]);
    let v_lo: [f64; 4] = std::array::from_fn(|i| ETA[i] * jet.v[i]);
    let mc = consts.m * consts.c;
    let h2 = consts.hbar / 2.0;
    let mut p_up = [0.0; 4];
    for d in 0..4 {
        let mut lev = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let e = epsilon_upper(a, b, c, d);
                    if e != 0.0 {
                        lev += (dlnrho_t[a] + ra[a]) * s_lo[b] * v_lo[c] * e;
                    }
                }
            }
        }
        p_up[d] =
            mc * jet.beta.cos() * jet.v[d] + h2 * (t1 * jet.s[d] - t2 * jet.v[d] - lev);
    }
    std::array::from_fn(|a| -ETA[a] * p_up[a] / consts.q)
}

/// Macroscopic (kinematic) momentum mc cos(beta) v^a: the spin-less limit of
/// the momentum field.
pub fn macroscopic_momentum(jet: &PolarJet, consts: &PhysConsts) -> [f64; 4] {
    std::array::from_fn(|a| consts.m * consts.c * jet.beta.cos() * jet.v[a])
}

/// Covariant inversion: both routes, hard error on disagreement.
pub fn invert_covariant(
    field: &dyn SpinorField,
    geom: &FrameGeometry,
    consts: &PhysConsts,
    p: &ChartPoint,
    mode: DerivMode,
) -> Result<Inversion> {
    let jet = PolarJet::compute(field, p, mode)?;
    let conn = geom.omega_at(p)?;
    let tet = geom.tetrad.at(p)?;
    let rt = r_tensor(&jet, &conn)?;
    let (a_m, imag, asl) = matrix_route_full(&jet, &rt, &tet, consts);
    check_purity(&asl, consts, mode, p)?;
    let a_c = component_route(&jet, &rt, &tet, consts);
    let mut cross: f64 = 0.0;
    for i in 0..4 {
        cross = cross.max((a_m[i] - a_c[i]).abs());
    }
    let tol = mode.cross_path_tol();
    let scale = a_m
        .iter()
        .fold(consts.m * consts.c, |acc, x| acc.max(x.abs()));
    if cross > tol * scale {
        return Err(Error::PathDisagreement {
            point: p.x,
            disagreement: cross,
            tolerance: tol * scale,
        });
    }
    let mut a_coord = [0.0; 4];
    for mu in 0..4 {
        for a in 0..4 {
            a_coord[mu] += tet.e_down[a][mu] * a_m[a];
        }
    }
    Ok(Inversion {
        p_tangent: std::array::from_fn(|a| -consts.q * a_m[a]),
        a_tangent: a_m,
        a_coord,
        cross_path: cross,
        imag_residue: imag,
    })
}

/// Gamma-basis purity report of eA-slash: the twelve forbidden projections
/// (Gamma_1 and Gamma_6..Gamma_16) normalized by the vector-part scale.
pub fn purity_projections(asl: &CMat4) -> [f64; 12] {
    let c = crate::clifford::basis_project(asl);
    let mut out = [0.0; 12];
    out[0] = c[0].norm();
    for (k, slot) in (5..16).enumerate() {
        out[k + 1] = c[slot].norm();
    }
    out
}

/// Cartesian inversion: the direct matrix formula
/// eA-slash = hbar dslash(Psi) g^2 g^1 Psi^-1 - mc Psi g^0 Psi^-1,
/// cross-checked against the component route, with the Gamma-basis purity
/// conditions enforced.
pub fn invert_cartesian(
    field: &dyn SpinorField,
    consts: &PhysConsts,
    p: &ChartPoint,
    mode: DerivMode,
) -> Result<Inversion> {
    if p.chart.kind != crate::geometry::ChartKind::Cartesian {
        return Err(Error::DomainViolation {
            coords: p.x,
            reason: "invert_cartesian requires the cartesian chart".into(),
        });
    }
    let jet = PolarJet::compute(field, p, mode)?;
    let psi_inv = jet.psi_inverse();
    let mut dsl = CMat4::zero();
    for mu in 0..4 {
        dsl += gamma_upper(mu) * jet.dpsi[mu];
    }
    let asl = (dsl * gamma_upper(2) * gamma_upper(1) * psi_inv).scale_re(consts.hbar)
        - (jet.psi * gamma_upper(0) * psi_inv).scale_re(consts.m * consts.c);
    let (a_direct, imag) = project_vector(&asl, consts.q);

    check_purity(&asl, consts, mode, p)?;

    // component route: scalarpart for A_0, flat covariant components for A_k
    let tet = Tetrad {
        e_down: crate::algebra::mat4_identity(),
        e_up: crate::algebra::mat4_identity(),
    };
    let conn = SpinConnection::zero();
    let rt = r_tensor(&jet, &conn)?;
    let a0_scalarpart = scalarpart_a0(&jet, consts);
    let a_vec = component_route(&jet, &rt, &tet, consts);
    let a_comp = [a0_scalarpart, a_vec[1], a_vec[2], a_vec[3]];

    let mut cross: f64 = 0.0;
    for i in 0..4 {
        cross = cross.max((a_direct[i] - a_comp[i]).abs());
    }
    let tol = mode.cross_path_tol();
    let ascale = a_direct
        .iter()
        .fold(consts.m * consts.c, |acc, x| acc.max(x.abs()));
    if cross > tol * ascale {
        return Err(Error::PathDisagreement {
            point: p.x,
            disagreement: cross,
            tolerance: tol * ascale,
        });
    }
    Ok(Inversion {
        p_tangent: std::array::from_fn(|a| -consts.q * a_direct[a]),
        a_tangent: a_direct,
        a_coord: a_direct,
        cross_path: cross,
        imag_residue: imag,
    })
}

/// The time component of the RDI component formulas:
/// eA_0 = hbar/2 ( -(1/v0^2)[s + v x (s x v)] . grad beta - e2 . d_0 e1
///                 + div(rho s x v)/rho ) - mc v_0 cos beta.
fn scalarpart_a0(jet: &PolarJet, consts: &PhysConsts) -> f64 {
    let v0 = jet.v[0];
    let vv = [jet.v[1], jet.v[2], jet.v[3]];
    let ss = [jet.s[1], jet.s[2], jet.s[3]];
    let vs: f64 = vv.iter().zip(&ss).map(|(a, b)| a * b).sum();
    // [s + v x (s x v)] = v0^2 s - (v.s) v  (euclidean 3-dot)
    let bracket: [f64; 3] = std::array::from_fn(|i| v0 * v0 * ss[i] - vs * vv[i]);
    let grad_beta = [jet.dbeta[1], jet.dbeta[2], jet.dbeta[3]];
    let term_beta: f64 = -bracket
        .iter()
        .zip(&grad_beta)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / (v0 * v0);
    let e2de1 = ((jet.e2 * jet.de1[0]).trace() / 4.0).re;
    // div(rho s x v)/rho: d_k(rho (s x v)^k) with exact product-rule pieces
    let mut div = 0.0;
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        // (s x v)^k = s_i v_j - s_j v_i  (1-based spatial slots i+1 etc.)
        let dterm = jet.drho[k + 1] * (jet.s[i + 1] * jet.v[j + 1] - jet.s[j + 1] * jet.v[i + 1])
            / jet.rho
            + (jet.ds[k + 1][i + 1] * jet.v[j + 1] + jet.s[i + 1] * jet.dv[k + 1][j + 1]
                - jet.ds[k + 1][j + 1] * jet.v[i + 1]
                - jet.s[j + 1] * jet.dv[k + 1][i + 1]);
        div += dterm;
    }
    let h2 = consts.hbar / 2.0;
    h2 * (term_beta - e2de1 + div) - consts.m * consts.c * v0 * jet.beta.cos()
}

/// Continuity constraints: c1 = div(rho v), c2 = div(rho s) + (2mc/hbar) rho sin(beta),
/// with the chart covariant divergence. Both vanish for valid solutions.
pub fn constraint_residuals(
    field: &dyn SpinorField,
    geom: &FrameGeometry,
    consts: &PhysConsts,
    p: &ChartPoint,
    mode: DerivMode,
) -> Result<(f64, f64)> {
    let sg = sqrt_abs_det_g(p);
    let current = |q: &ChartPoint, which: usize| -> Result<[f64; 4]> {
        let jet = PolarJet::compute(field, q, mode)?;
        let tet = geom.tetrad.at(q)?;
        let vec = if which == 0 { jet.v } else { jet.s };
        let sgq = sqrt_abs_det_g(q);
        let mut out = [0.0; 4];
        for mu in 0..4 {
            for a in 0..4 {
                out[mu] += sgq * jet.rho * vec[a] * tet.e_up[mu][a];
            }
        }
        Ok(out)
    };
    let mut c = [0.0f64; 2];
    for (which, cv) in c.iter_mut().enumerate() {
        let mut div = 0.0;
        for mu in 0..4 {
            let h = fd_step(p.x[mu]);
            let jp = current(&p.shifted(mu, h), which)?;
            let jm = current(&p.shifted(mu, -h), which)?;
            div += (jp[mu] - jm[mu]) / (2.0 * h);
        }
        *cv = div / sg;
    }
    let jet = PolarJet::compute(field, p, mode)?;
    let c2 = c[1] + 2.0 * consts.m * consts.c / consts.hbar * jet.rho * jet.beta.sin();
    Ok((c[0], c2))
}

/// The two terms of the spin continuity constraint separately (they cancel
/// non-trivially when beta != 0).
pub fn spin_continuity_terms(
    field: &dyn SpinorField,
    geom: &FrameGeometry,
    consts: &PhysConsts,
    p: &ChartPoint,
    mode: DerivMode,
) -> Result<(f64, f64)> {
    let (_, c2) = constraint_residuals(field, geom, consts, p, mode)?;
    let jet = PolarJet::compute(field, p, mode)?;
    let sink = 2.0 * consts.m * consts.c / consts.hbar * jet.rho * jet.beta.sin();
    Ok((c2 - sink, sink))
}

/// Geometrical identity residual: max |nabla_mu w_i - R_{ji mu} w^j| over
/// components, for w in {v, s}, with the standard covector covariant
/// derivative nabla_mu w_i = d_mu w_i - eta^{jk} Omega_{ki mu} w_j.
pub fn geosvid_residual(
    field: &dyn SpinorField,
    geom: &FrameGeometry,
    p: &ChartPoint,
    mode: DerivMode,
) -> Result<f64> {
    let jet = PolarJet::compute(field, p, mode)?;
    let conn = geom.omega_at(p)?;
    let rt = r_tensor(&jet, &conn)?;
    let mut worst: f64 = 0.0;
    for which in 0..2 {
        let w = if which == 0 { jet.v } else { jet.s };
        let dw = if which == 0 { jet.dv } else { jet.ds };
        for mu in 0..4 {
            for i in 0..4 {
                // nabla_mu w_i = d_mu w_i - eta^{jk} Omega_{ki mu} w_j
                //              = d_mu (eta_i w^i) - Omega_{ji mu} w^j
                let mut lhs = ETA[i] * dw[mu][i];
                for j in 0..4 {
                    lhs -= conn.omega[j][i][mu] * w[j];
                }
                let mut rhs = 0.0;
                for j in 0..4 {
                    rhs += rt.r[j][i][mu] * w[j];
                }
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// Evaluate the metric at p (helper reused by verification code).
pub fn metric_at(p: &ChartPoint) -> Result<Mat4> {
    Ok(metric_and_christoffels(p)?.0)
}

#[allow(unused_imports)]
use crate::algebra::C_I; // referenced in docs

pub type Coefficients16 = [C64; 16];
