//! Fixed-representation spacetime Clifford algebra Cl(1,3).
//!
//! Everything is frozen to the standard (Dirac) representation with signature
//! (+,-,-,-) and eps_{0123} = +1. Lower-index gamma_a are the matrices below;
//! upper indices are raised with eta. `IBOLD` = gamma_0 gamma_1 gamma_2 gamma_3
//! plays the role of the unit imaginary of the even subalgebra (it commutes
//! with even elements and anticommutes with vectors), and i*GAMMA5 = IBOLD.

use crate::algebra::{C64, CMat4, C_I, C_ONE, C_ZERO};
use crate::error::{Error, Result};
use once_cell::sync::Lazy;

/// Minkowski metric diag(+,-,-,-).
pub const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

fn pauli(k: usize) -> [[C64; 2]; 2] {
    match k {
        1 => [[C_ZERO, C_ONE], [C_ONE, C_ZERO]],
        2 => [[C_ZERO, -C_I], [C_I, C_ZERO]],
        3 => [[C_ONE, C_ZERO], [C_ZERO, -C_ONE]],
        _ => unreachable!(),
    }
}

fn build_gamma_lower() -> [CMat4; 4] {
    let mut g0 = CMat4::zero();
    g0.m[0][0] = C_ONE;
    g0.m[1][1] = C_ONE;
    g0.m[2][2] = -C_ONE;
    g0.m[3][3] = -C_ONE;
    let mut gs = [g0, CMat4::zero(), CMat4::zero(), CMat4::zero()];
    for k in 1..4 {
        let s = pauli(k);
        let mut g = CMat4::zero();
        for i in 0..2 {
            for j in 0..2 {
                g.m[i][2 + j] = -s[i][j];
                g.m[2 + i][j] = s[i][j];
            }
        }
        gs[k] = g;
    }
    gs
}

static GAMMA_LO: Lazy<[CMat4; 4]> = Lazy::new(build_gamma_lower);
static GAMMA_UP: Lazy<[CMat4; 4]> = Lazy::new(|| {
    let g = *GAMMA_LO;
    [g[0], -g[1], -g[2], -g[3]]
});
static GAMMA5: Lazy<CMat4> = Lazy::new(|| {
    (GAMMA_UP[0] * GAMMA_UP[1] * GAMMA_UP[2] * GAMMA_UP[3]).scale(C_I)
});
static IBOLD: Lazy<CMat4> =
    Lazy::new(|| GAMMA_LO[0] * GAMMA_LO[1] * GAMMA_LO[2] * GAMMA_LO[3]);
static SIGMA_LO: Lazy<[[CMat4; 4]; 4]> = Lazy::new(|| {
    let g = *GAMMA_LO;
    let mut s = [[CMat4::zero(); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            s[a][b] = (g[a] * g[b] - g[b] * g[a]).scale_re(0.25);
        }
    }
    s
});
static SIGMA_UP: Lazy<[[CMat4; 4]; 4]> = Lazy::new(|| {
    let mut s = [[CMat4::zero(); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            s[a][b] = SIGMA_LO[a][b].scale_re(ETA[a] * ETA[b]);
        }
    }
    s
});

/// gamma_a, lower tangent index.
pub fn gamma_lower(a: usize) -> CMat4 {
    GAMMA_LO[a]
}

/// gamma^a = eta^{ab} gamma_b.
pub fn gamma_upper(a: usize) -> CMat4 {
    GAMMA_UP[a]
}

/// Checked accessor for the fixed Dirac-representation gamma_a.
pub fn gamma_flat(a: usize) -> Result<CMat4> {
    if a < 4 {
        Ok(GAMMA_LO[a])
    } else {
        Err(Error::IndexOutOfRange { index: a })
    }
}

/// gamma^5 = i gamma^0 gamma^1 gamma^2 gamma^3 (off-diagonal identity blocks).
pub fn gamma5() -> CMat4 {
    *GAMMA5
}

/// Bold-i = gamma_0 gamma_1 gamma_2 gamma_3 = i gamma^5; squares to -1.
pub fn ibold() -> CMat4 {
    *IBOLD
}

/// alpha_k = gamma_k gamma_0.
pub fn alpha(k: usize) -> CMat4 {
    GAMMA_LO[k] * GAMMA_LO[0]
}

/// sigma_ab = 1/4 [gamma_a, gamma_b], lower indices.
pub fn sigma(a: usize, b: usize) -> CMat4 {
    SIGMA_LO[a][b]
}

/// sigma^{ab}, both indices raised.
pub fn sigma_upper(a: usize, b: usize) -> CMat4 {
    SIGMA_UP[a][b]
}

/// Hestenes reversion: tilde(M) = gamma_0 M^dagger gamma_0.
/// Anti-automorphism with tilde(gamma_a) = gamma_a.
pub fn tilde(m: &CMat4) -> CMat4 {
    GAMMA_LO[0] * m.dagger() * GAMMA_LO[0]
}

/// exp(ibold * x) = cos(x) + ibold sin(x).
pub fn exp_ibold(x: f64) -> CMat4 {
    CMat4::identity().scale_re(x.cos()) + IBOLD.scale_re(x.sin())
}

/// Levi-Civita symbol, all indices down, eps_{0123} = +1.
pub fn epsilon(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let idx = [a, b, c, d];
    let mut seen = [false; 4];
    for &i in &idx {
        if i > 3 || seen[i] {
            return 0.0;
        }
        seen[i] = true;
    }
    let mut p = idx;
    let mut sign = 1.0;
    for i in 0..4 {
        while p[i] != i {
            let j = p[i];
            p.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

/// eps with all indices raised: eps^{abcd} = -eps_{abcd} for signature (+,-,-,-).
pub fn epsilon_upper(a: usize, b: usize, c: usize, d: usize) -> f64 {
    -epsilon(a, b, c, d)
}

// ---------------------------------------------------------------------------
// 16-element Gamma basis and projection
// ---------------------------------------------------------------------------

/// Gamma_1..Gamma_16 in the paper's ordering:
/// 1, gamma^0..gamma^3, alpha_1..alpha_3, gamma^2 gamma^3, gamma^3 gamma^1,
/// gamma^1 gamma^2, gamma^1 gamma^2 gamma^3, gamma^0 gamma^2 gamma^3,
/// gamma^0 gamma^3 gamma^1, gamma^0 gamma^1 gamma^2, gamma^5.
static GAMMA_BASIS: Lazy<[CMat4; 16]> = Lazy::new(|| {
    let gu = *GAMMA_UP;
    [
        CMat4::identity(),
        gu[0],
        gu[1],
        gu[2],
        gu[3],
        alpha(1),
        alpha(2),
        alpha(3),
        gu[2] * gu[3],
        gu[3] * gu[1],
        gu[1] * gu[2],
        gu[1] * gu[2] * gu[3],
        gu[0] * gu[2] * gu[3],
        gu[0] * gu[3] * gu[1],
        gu[0] * gu[1] * gu[2],
        *GAMMA5,
    ]
});

/// Dual basis signs: the Gram matrix Tr(Gamma_m Gamma_n)/4 of this basis is
/// diagonal with entries +-1; inverted once here so reconstruction is exact.
static GAMMA_DUAL_SIGNS: Lazy<[f64; 16]> = Lazy::new(|| {
    let basis = &*GAMMA_BASIS;
    let mut signs = [0.0f64; 16];
    for (n, sn) in signs.iter_mut().enumerate() {
        // self-overlap; off-diagonal overlaps vanish (checked in tests by
        // exact reconstruction of random matrices)
        let g = ((basis[n] * basis[n]).trace() / 4.0).re;
        assert!((g.abs() - 1.0).abs() < 1e-14, "Gamma basis self-overlap");
        *sn = 1.0 / g;
    }
    signs
});

pub fn gamma_basis(n: usize) -> CMat4 {
    GAMMA_BASIS[n]
}

/// Project M onto the 16-element Gamma basis: returns c with
/// M = sum_n c[n] * Gamma_{n+1}, exact for any complex 4x4 matrix.
pub fn basis_project(m: &CMat4) -> [C64; 16] {
    let basis = &*GAMMA_BASIS;
    let signs = &*GAMMA_DUAL_SIGNS;
    let mut c = [C_ZERO; 16];
    for n in 0..16 {
        c[n] = basis[n].trace_mul(m) * C64::new(signs[n] / 4.0, 0.0);
    }
    c
}

pub fn basis_reconstruct(c: &[C64; 16]) -> CMat4 {
    let basis = &*GAMMA_BASIS;
    let mut out = CMat4::zero();
    for n in 0..16 {
        out += basis[n].scale(c[n]);
    }
    out
}

// ---------------------------------------------------------------------------
// Compact Lorentz transformation
// ---------------------------------------------------------------------------

/// Antisymmetric rapidity/angle parameters theta_{ab} plus everything derived
/// from them for the closed-form Lorentz transformation.
#[derive(Clone, Debug)]
pub struct LorentzParams {
    pub theta: [[f64; 4]; 4],
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
}

impl LorentzParams {
    pub fn new(theta: [[f64; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                let dev = theta[i][j] + theta[j][i];
                if dev != 0.0 {
                    return Err(Error::NotAntisymmetric {
                        i,
                        j,
                        deviation: dev,
                    });
                }
                if !theta[i][j].is_finite() {
                    return Err(Error::Config("non-finite Lorentz parameter".into()));
                }
            }
        }
        let up = raise_antisym(&theta);
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                a -= 0.125 * theta[i][j] * up[i][j];
                for k in 0..4 {
                    for l in 0..4 {
                        let e = epsilon_upper(i, j, k, l);
                        if e != 0.0 {
                            b += theta[i][j] * theta[k][l] * e / 16.0;
                        }
                    }
                }
            }
        }
        let s = a.hypot(b);
        let x = ((a + s) / 2.0).max(0.0).sqrt();
        // branch with 2xy = b
        let y = ((s - a) / 2.0).max(0.0).sqrt() * if b < 0.0 { -1.0 } else { 1.0 };
        Ok(LorentzParams { theta, a, b, x, y })
    }
}

fn raise_antisym(t: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut up = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            up[i][j] = ETA[i] * ETA[j] * t[i][j];
        }
    }
    up
}

/// Result of the compact closed-form Lorentz transformation.
#[derive(Clone, Debug)]
pub struct CompactLorentz {
    pub x_scalar: f64,
    pub y_pseudo: f64,
    /// Z^{ab}, upper indices.
    pub z: [[f64; 4]; 4],
    pub lambda: CMat4,
    pub lambda_inv: CMat4,
    /// SO(1,3) vector representation r^a_b with r^a_b Lambda gamma^b Lambda^-1 = gamma^a.
    pub vector_rep: [[f64; 4]; 4],
}

/// Lambda = X 1 + Y i gamma^5 + 1/2 Z^{ab} sigma_ab, its inverse and vector
/// representation. The degenerate a = b = 0, theta != 0 case is handled by a
/// second-order Taylor expansion of the coefficient functions (switch at
/// x^2 + y^2 < 1e-8).
pub fn lorentz_compact(p: &LorentzParams) -> Result<CompactLorentz> {
    let (x, y) = (p.x, p.y);
    let big_x = y.cos() * x.cosh();
    let big_y = y.sin() * x.sinh();
    let x2y2 = x * x + y * y;
    let (c1, c2) = if x2y2 < 1e-8 {
        (1.0 + (x * x - y * y) / 3.0, x * y / 3.0)
    } else {
        (
            (x * x.sinh() * y.cos() + y * y.sin() * x.cosh()) / x2y2,
            (x * x.cosh() * y.sin() - y * y.cos() * x.sinh()) / x2y2,
        )
    };
    let th_up = raise_antisym(&p.theta);
    let mut z = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut dual = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let e = epsilon_upper(i, j, a, b);
                    if e != 0.0 {
                        dual += 0.5 * p.theta[i][j] * e;
                    }
                }
            }
            z[a][b] = c1 * th_up[a][b] + c2 * dual;
        }
    }

    let mut zsig = CMat4::zero();
    for a in 0..4 {
        for b in 0..4 {
            if z[a][b] != 0.0 {
                zsig += sigma(a, b).scale_re(0.5 * z[a][b]);
            }
        }
    }
    let base = CMat4::identity().scale_re(big_x) + gamma5().scale(C_I * C64::new(big_y, 0.0));
    let lambda = base + zsig;
    let lambda_inv = base - zsig;

    // prop1/prop2 internal checks
    let mut zz = 0.0;
    let mut zzeps = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            zz += z[a][b] * z[a][b] * ETA[a] * ETA[b];
            for i in 0..4 {
                for j in 0..4 {
                    let e = epsilon(i, j, a, b);
                    if e != 0.0 {
                        zzeps += z[i][j] * z[a][b] * e;
                    }
                }
            }
        }
    }
    let prop1 = big_x * big_x - big_y * big_y + zz / 8.0 - 1.0;
    let prop2 = 2.0 * big_x * big_y - zzeps / 16.0;
    let residual = prop1.abs().max(prop2.abs());
    // scale-aware: cosh x grows with |theta|
    if residual > 1e-9 * (1.0 + big_x * big_x) {
        return Err(Error::LorentzPropertyViolation { residual });
    }

    let mut vector_rep = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            // r^a_b = 1/4 Tr(gamma_b Lambda^-1 gamma^a Lambda)
            let t = (gamma_lower(b) * lambda_inv * gamma_upper(a) * lambda).trace() / 4.0;
            vector_rep[a][b] = t.re;
        }
    }

    Ok(CompactLorentz {
        x_scalar: big_x,
        y_pseudo: big_y,
        z,
        lambda,
        lambda_inv,
        vector_rep,
    })
}
