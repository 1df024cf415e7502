//! Dense 4x4 complex and real matrix arithmetic.
//!
//! `CMat4` is the universal carrier for Clifford elements, rotors and matrix
//! spinors. It is `Copy` (256 bytes) so expression-heavy physics code stays
//! allocation-free.

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub type C64 = Complex64;

pub const C_ZERO: C64 = C64::new(0.0, 0.0);
pub const C_ONE: C64 = C64::new(1.0, 0.0);
pub const C_I: C64 = C64::new(0.0, 1.0);

/// 4x4 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat4 {
    pub m: [[C64; 4]; 4],
}

impl CMat4 {
    pub const fn new(m: [[C64; 4]; 4]) -> Self {
        CMat4 { m }
    }

    pub fn zero() -> Self {
        CMat4 {
            m: [[C_ZERO; 4]; 4],
        }
    }

    pub fn identity() -> Self {
        let mut m = [[C_ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = C_ONE;
        }
        CMat4 { m }
    }

    pub fn from_real(r: [[f64; 4]; 4]) -> Self {
        let mut m = [[C_ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = C64::new(r[i][j], 0.0);
            }
        }
        CMat4 { m }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2] + self.m[3][3]
    }

    /// Tr(self * rhs) without forming the product.
    pub fn trace_mul(&self, rhs: &CMat4) -> C64 {
        let mut t = C_ZERO;
        for i in 0..4 {
            for k in 0..4 {
                t += self.m[i][k] * rhs.m[k][i];
            }
        }
        t
    }

    /// Hermitian conjugate.
    pub fn dagger(&self) -> Self {
        let mut out = CMat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn conj_entries(&self) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e = e.conj();
            }
        }
        out
    }

    pub fn col(&self, j: usize) -> [C64; 4] {
        [self.m[0][j], self.m[1][j], self.m[2][j], self.m[3][j]]
    }

    pub fn set_col(&mut self, j: usize, c: [C64; 4]) {
        for i in 0..4 {
            self.m[i][j] = c[i];
        }
    }

    pub fn mul_vec(&self, v: [C64; 4]) -> [C64; 4] {
        let mut out = [C_ZERO; 4];
        for i in 0..4 {
            for k in 0..4 {
                out[i] += self.m[i][k] * v[k];
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|e| e.re.is_finite() && e.im.is_finite())
    }

    /// Determinant by cofactor expansion over 2x2 complements.
    pub fn det(&self) -> C64 {
        let m = &self.m;
        let d2 = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        // Laplace expansion along the first two rows
        d2(0, 1, 0, 1) * d2(2, 3, 2, 3) - d2(0, 1, 0, 2) * d2(2, 3, 1, 3)
            + d2(0, 1, 0, 3) * d2(2, 3, 1, 2)
            + d2(0, 1, 1, 2) * d2(2, 3, 0, 3)
            - d2(0, 1, 1, 3) * d2(2, 3, 0, 2)
            + d2(0, 1, 2, 3) * d2(2, 3, 0, 1)
    }

    /// Matrix exponential by scaling-and-squaring with a Taylor core.
    ///
    /// Accurate to machine precision for the moderate norms used here
    /// (Lorentz generators with |theta| of order one).
    pub fn expm(&self) -> Self {
        let norm = self.frobenius();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let a = self.scale_re(1.0 / f64::powi(2.0, squarings as i32));
        let mut term = CMat4::identity();
        let mut sum = CMat4::identity();
        for k in 1..=24 {
            term = (term * a).scale_re(1.0 / k as f64);
            sum += term;
            if term.max_abs() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }
}

impl Add for CMat4 {
    type Output = CMat4;
    fn add(self, rhs: CMat4) -> CMat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl AddAssign for CMat4 {
    fn add_assign(&mut self, rhs: CMat4) {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] += rhs.m[i][j];
            }
        }
    }
}

impl Sub for CMat4 {
    type Output = CMat4;
    fn sub(self, rhs: CMat4) -> CMat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.m[i][j] -= rhs.m[i][j];
            }
        }
        out
    }
}

impl Neg for CMat4 {
    type Output = CMat4;
    fn neg(self) -> CMat4 {
        self.scale_re(-1.0)
    }
}

impl Mul for CMat4 {
    type Output = CMat4;
    fn mul(self, rhs: CMat4) -> CMat4 {
        let mut out = CMat4::zero();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.m[i][k];
                if a == C_ZERO {
                    continue;
                }
                for j in 0..4 {
                    out.m[i][j] += a * rhs.m[k][j];
                }
            }
        }
        out
    }
}

/// 4x4 real matrix helpers (tetrads, metrics, Lorentz vector representation).
pub type Mat4 = [[f64; 4]; 4];

pub fn mat4_zero() -> Mat4 {
    [[0.0; 4]; 4]
}

pub fn mat4_identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let x = a[i][k];
            if x == 0.0 {
                continue;
            }
            for j in 0..4 {
                out[i][j] += x * b[k][j];
            }
        }
    }
    out
}

pub fn mat4_transpose(a: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn mat4_max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

/// Gauss-Jordan inverse with partial pivoting. Panics on singular input;
/// tetrads are invertible by construction on the chart domain.
pub fn mat4_inv(a: &Mat4) -> Mat4 {
    let mut aug = [[0.0f64; 8]; 4];
    for i in 0..4 {
        aug[i][..4].copy_from_slice(&a[i]);
        aug[i][4 + i] = 1.0;
    }
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if aug[r][col].abs() > aug[piv][col].abs() {
                piv = r;
            }
        }
        assert!(aug[piv][col].abs() > 1e-300, "singular 4x4 matrix");
        aug.swap(col, piv);
        let d = aug[col][col];
        for e in aug[col].iter_mut() {
            *e /= d;
        }
        for r in 0..4 {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..8 {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        out[i].copy_from_slice(&aug[i][4..]);
    }
    out
}
