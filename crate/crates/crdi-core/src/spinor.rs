//! Column and matrix spinors: the Hestenes map, polar decomposition,
//! bilinear covariants and the Baylis block-diagonal form.

use crate::algebra::{C64, CMat4, C_I, C_ONE, C_ZERO};
use crate::clifford::{exp_ibold, gamma5, gamma_lower, gamma_upper, ibold, tilde, ETA};
use crate::error::{Error, Result};

/// Dirac column spinor with the real octet (r_mu, s_mu) of the quaternion
/// decomposition: psi1 = r0 - i r3, psi2 = r2 - i r1, psi3 = s3 + i s0,
/// psi4 = s1 + i s2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnSpinor {
    pub psi: [C64; 4],
}

impl ColumnSpinor {
    pub fn new(psi: [C64; 4]) -> Self {
        ColumnSpinor { psi }
    }

    pub fn from_octet(r: [f64; 4], s: [f64; 4]) -> Self {
        ColumnSpinor {
            psi: [
                C64::new(r[0], -r[3]),
                C64::new(r[2], -r[1]),
                C64::new(s[3], s[0]),
                C64::new(s[1], s[2]),
            ],
        }
    }

    pub fn octet(&self) -> ([f64; 4], [f64; 4]) {
        let p = &self.psi;
        (
            [p[0].re, -p[1].im, p[1].re, -p[0].im],
            [p[2].im, p[3].re, p[3].im, p[2].re],
        )
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Matrix spinor: a CMat4 whose columns are psi and its discrete transforms,
/// with cached polar data (density, YT angle, rotor).
#[derive(Clone, Copy, Debug)]
pub struct MatrixSpinor {
    pub m: CMat4,
    pub rho: f64,
    pub beta: f64,
    pub rotor: CMat4,
}

impl MatrixSpinor {
    /// Decompose an invertible even matrix; fails on singular spinors.
    pub fn from_matrix(m: CMat4) -> Result<Self> {
        let (rho, beta, rotor) = polar(&m)?;
        Ok(MatrixSpinor { m, rho, beta, rotor })
    }

    /// Assemble sqrt(rho) exp(ibold beta/2) rotor.
    pub fn assemble(rho: f64, beta: f64, rotor: &CMat4) -> Self {
        let m = (exp_ibold(beta / 2.0) * *rotor).scale_re(rho.sqrt());
        MatrixSpinor {
            m,
            rho,
            beta,
            rotor: *rotor,
        }
    }

    pub fn column(&self) -> ColumnSpinor {
        ColumnSpinor::new(self.m.col(0))
    }
}

/// Hestenes map: columns [psi | gamma^5 i gamma^2 psi* | gamma^5 psi | i gamma^2 psi*].
/// The first column of the result is psi itself.
pub fn to_matrix(psi: &ColumnSpinor) -> CMat4 {
    let p = &psi.psi;
    let c = |z: C64| z.conj();
    CMat4::new([
        [p[0], -c(p[1]), p[2], c(p[3])],
        [p[1], c(p[0]), p[3], -c(p[2])],
        [p[2], c(p[3]), p[0], -c(p[1])],
        [p[3], -c(p[2]), p[1], c(p[0])],
    ])
}

/// Relative singularity threshold: |det Psi| = rho^2 is compared against
/// (1e-12 * scale)^2 with scale = frobenius/2, so the cut tracks the spinor's
/// own magnitude.
pub fn singularity_threshold(m: &CMat4) -> f64 {
    let scale = m.frobenius() / 2.0;
    1e-12 * scale * scale
}

/// Scalar and pseudoscalar parts of Psi tilde(Psi) = rho e^{ibold beta}.
fn invariant_pair(m: &CMat4) -> (f64, f64) {
    let k = *m * tilde(m);
    let rc = (k.trace() / 4.0).re;
    // K = rc + rs*ibold: Tr(ibold K)/4 = -rs since ibold^2 = -1
    let rs = -((ibold() * k).trace() / 4.0).re;
    (rc, rs)
}

/// Polar decomposition Psi = sqrt(rho) exp(ibold beta/2) R with R unimodular.
/// beta is the two-argument arctangent of (2 r.s, r.r - s.s) in (-pi, pi].
pub fn polar(m: &CMat4) -> Result<(f64, f64, CMat4)> {
    let (rc, rs) = invariant_pair(m);
    let rho = rc.hypot(rs);
    if rho <= singularity_threshold(m) {
        return Err(Error::SingularSpinor {
            point: [f64::NAN; 4],
            rho,
            threshold: singularity_threshold(m),
        });
    }
    let beta = rs.atan2(rc);
    let rotor = (*m * exp_ibold(-beta / 2.0)).scale_re(1.0 / rho.sqrt());
    Ok((rho, beta, rotor))
}

/// (rho, beta) from the real octet alone. The invariants are Euclidean sums:
/// rho cos(beta) = sum r^2 - sum s^2, rho sin(beta) = 2 sum r*s, matching
/// det Psi = rho^2.
pub fn rho_beta_from_components(r: [f64; 4], s: [f64; 4]) -> Result<(f64, f64)> {
    let rr: f64 = r.iter().map(|x| x * x).sum();
    let ss: f64 = s.iter().map(|x| x * x).sum();
    let rs: f64 = r.iter().zip(&s).map(|(a, b)| a * b).sum();
    let rc = rr - ss;
    let rsin = 2.0 * rs;
    let rho = rc.hypot(rsin);
    let scale = rr + ss;
    if rho <= 1e-24 * scale * scale {
        return Err(Error::SingularSpinor {
            point: [f64::NAN; 4],
            rho,
            threshold: 1e-24 * scale * scale,
        });
    }
    Ok((rho, rsin.atan2(rc)))
}

/// Inverse of an invertible matrix spinor: Psi^-1 = tilde(Psi) e^{-ibold beta} / rho.
pub fn spinor_inverse(m: &CMat4) -> Result<CMat4> {
    let (rho, beta, _) = polar(m)?;
    Ok((tilde(m) * exp_ibold(-beta)).scale_re(1.0 / rho))
}

/// Bilinear covariants of a matrix spinor.
#[derive(Clone, Copy, Debug)]
pub struct Bilinears {
    /// Velocity, contravariant tangent components; v.v = +1.
    pub v: [f64; 4],
    /// Spin, contravariant tangent components; s.s = -1, v.s = 0.
    pub s: [f64; 4],
    /// Comoving frame vectors e_j = Psi gamma_j tilde(Psi)/rho as matrices.
    pub e1: CMat4,
    pub e2: CMat4,
}

/// v^a = Tr(gamma^a Psi gamma_0 tilde(Psi))/(4 rho), spin with gamma_3.
pub fn bilinears(m: &CMat4) -> Result<Bilinears> {
    let (rho, _, _) = polar(m)?;
    let mt = tilde(m);
    let vsl = *m * gamma_lower(0) * mt;
    let ssl = *m * gamma_lower(3) * mt;
    let mut v = [0.0; 4];
    let mut s = [0.0; 4];
    for a in 0..4 {
        v[a] = ((gamma_upper(a) * vsl).trace() / 4.0).re / rho;
        s[a] = ((gamma_upper(a) * ssl).trace() / 4.0).re / rho;
    }
    Ok(Bilinears {
        v,
        s,
        e1: (*m * gamma_lower(1) * mt).scale_re(1.0 / rho),
        e2: (*m * gamma_lower(2) * mt).scale_re(1.0 / rho),
    })
}

pub fn minkowski_dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| ETA[i] * a[i] * b[i]).sum()
}

/// Unitary map to the chiral (Weyl) representation: U = (1 + gamma^5 gamma_0)/sqrt(2).
fn baylis_u() -> CMat4 {
    (CMat4::identity() + gamma5() * gamma_lower(0)).scale_re(1.0 / std::f64::consts::SQRT_2)
}

/// Baylis form Theta = U Psi U^dagger, 2x2 block-diagonal for any matrix
/// spinor built from a column.
pub fn baylis(m: &CMat4) -> CMat4 {
    let u = baylis_u();
    u * *m * u.dagger()
}

/// Norm of the off-diagonal 2x2 blocks of the Baylis form.
pub fn baylis_offdiagonal_norm(theta: &CMat4) -> f64 {
    let mut sum = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            sum += theta.m[i][2 + j].norm_sqr() + theta.m[2 + i][j].norm_sqr();
        }
    }
    sum.sqrt()
}

/// Upper and lower 2x2 blocks of the Baylis form.
pub fn baylis_blocks(theta: &CMat4) -> ([[C64; 2]; 2], [[C64; 2]; 2]) {
    let mut q = [[C_ZERO; 2]; 2];
    let mut l = [[C_ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            q[i][j] = theta.m[i][j];
            l[i][j] = theta.m[2 + i][2 + j];
        }
    }
    (q, l)
}

pub fn det2(q: &[[C64; 2]; 2]) -> C64 {
    q[0][0] * q[1][1] - q[0][1] * q[1][0]
}

/// sigma_2 Q* sigma_2 (= sigma_2 (Q^dagger)^T sigma_2), the conjugate block
/// appearing in the lower half of the Baylis form.
pub fn sigma2_conjugate(q: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let s2 = [[C_ZERO, -C_I], [C_I, C_ZERO]];
    let qc = [
        [q[0][0].conj(), q[0][1].conj()],
        [q[1][0].conj(), q[1][1].conj()],
    ];
    let mut tmp = [[C_ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                tmp[i][j] += s2[i][k] * qc[k][j];
            }
        }
    }
    let mut out = [[C_ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j] += tmp[i][k] * s2[k][j];
            }
        }
    }
    out
}

/// Spin basis u_1..u_4 used by the Hestenes construction.
pub fn basis_spinor(n: usize) -> ColumnSpinor {
    let mut psi = [C_ZERO; 4];
    psi[n] = C_ONE;
    ColumnSpinor::new(psi)
}

pub use crate::clifford::tilde as reversion;

#[allow(unused_imports)]
use crate::clifford::sigma; // referenced by doc comments
