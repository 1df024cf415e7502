//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)) with
//! event detection, used for the radial constraint ODEs.

use crate::error::{Error, Result};

pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    /// Step ceiling as a fraction of max(1, |t|); keeps the accepted nodes
    /// dense enough that the cubic Hermite reconstruction matches the
    /// integration tolerance.
    pub max_step_rel: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 2_000_000,
            initial_step: 1e-4,
            max_step_rel: f64::INFINITY,
        }
    }
}

/// Dense solution: accepted nodes with state and derivative at each, enough
/// for C^1 cubic Hermite reconstruction between nodes.
#[derive(Debug)]
pub struct OdeSolution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate dy/dt = f(t, y) from t0 to t1 (either direction). `event`, when
/// supplied, is checked on every accepted state; a `Some(reason)` return
/// terminates the run with an `Integration` error carrying that diagnostic.
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    mut event: Option<&mut dyn FnMut(f64, &[f64; N]) -> Option<String>>,
) -> Result<OdeSolution<N>> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.initial_step.min((t1 - t0).abs()).max(1e-14) * dir;
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0],
        dy: vec![f(t0, &y0)],
    };
    let mut k = [[0.0f64; N]; 7];
    k[0] = f(t, &y);
    for _step in 0..opts.max_steps {
        if (t - t1) * dir >= 0.0 {
            return Ok(sol);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = if s < 6 { A[s - 1][j] } else { B5[j] };
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            let c = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0][s - 1];
            k[s] = f(t + c * h, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            for i in 0..N {
                y5[i] += h * B5[j] * kj[i];
                y4[i] += h * B4[j] * kj[i];
            }
        }
        for i in 0..N {
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4[i]) / sc).abs());
        }
        if !err.is_finite() {
            // overshot a singularity inside the step; reject and shrink
            h *= 0.2;
            if h.abs() < 1e-15 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    r: t,
                    reason: "step size underflow at a singularity (blow-up)".into(),
                });
            }
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::Integration {
                    r: t,
                    reason: "state became non-finite".into(),
                });
            }
            if let Some(ev) = event.as_deref_mut() {
                if let Some(reason) = ev(t, &y) {
                    return Err(Error::Integration { r: t, reason });
                }
            }
            k[0] = f(t, &y); // FSAL not exploited; clarity over speed here
            sol.t.push(t);
            sol.y.push(y);
            sol.dy.push(k[0]);
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= fac;
        let cap = opts.max_step_rel * t.abs().max(1.0);
        if h.abs() > cap {
            h = cap * dir;
        }
        if h.abs() < 1e-15 * t.abs().max(1.0) {
            return Err(Error::Integration {
                r: t,
                reason: "step size underflow".into(),
            });
        }
    }
    Err(Error::Integration {
        r: t,
        reason: "max step count exceeded".into(),
    })
}

impl<const N: usize> OdeSolution<N> {
    /// C^1 cubic Hermite evaluation between accepted nodes.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 {
            return self.y[0];
        }
        let increasing = self.t[n - 1] >= self.t[0];
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if (self.t[mid] <= t) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, t1) = (self.t[lo], self.t[hi]);
        let hseg = t1 - t0;
        let u = ((t - t0) / hseg).clamp(0.0, 1.0);
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * self.y[lo][i]
                + h10 * hseg * self.dy[lo][i]
                + h01 * self.y[hi][i]
                + h11 * hseg * self.dy[hi][i];
        }
        out
    }

    /// Derivative of the Hermite interpolant.
    pub fn eval_deriv(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 {
            return self.dy[0];
        }
        let increasing = self.t[n - 1] >= self.t[0];
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if (self.t[mid] <= t) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, t1) = (self.t[lo], self.t[hi]);
        let hseg = t1 - t0;
        let u = ((t - t0) / hseg).clamp(0.0, 1.0);
        let u2 = u * u;
        let dh00 = (6.0 * u2 - 6.0 * u) / hseg;
        let dh10 = 3.0 * u2 - 4.0 * u + 1.0;
        let dh01 = (-6.0 * u2 + 6.0 * u) / hseg;
        let dh11 = 3.0 * u2 - 2.0 * u;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = dh00 * self.y[lo][i]
                + dh10 * self.dy[lo][i]
                + dh01 * self.y[hi][i]
                + dh11 * self.dy[hi][i];
        }
        out
    }
}
