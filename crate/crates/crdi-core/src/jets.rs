//! First-order scalar jets: a value together with its gradient over the four
//! chart coordinates. Used to assemble exact analytic derivatives of the
//! solution families by plain chain rule.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 4],
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        Jet { v, d: [0.0; 4] }
    }

    pub fn coord(v: f64, mu: usize) -> Jet {
        let mut d = [0.0; 4];
        d[mu] = 1.0;
        Jet { v, d }
    }

    pub fn chain(self, f: f64, df: f64) -> Jet {
        Jet {
            v: f,
            d: self.d.map(|x| x * df),
        }
    }

    pub fn scale(self, s: f64) -> Jet {
        Jet {
            v: self.v * s,
            d: self.d.map(|x| x * s),
        }
    }

    pub fn recip(self) -> Jet {
        self.chain(1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn sqrt(self) -> Jet {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r)
    }

    /// x^p for constant p (x > 0).
    pub fn powf(self, p: f64) -> Jet {
        self.chain(self.v.powf(p), p * self.v.powf(p - 1.0))
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn ln(self) -> Jet {
        self.chain(self.v.ln(), 1.0 / self.v)
    }

    pub fn sin(self) -> Jet {
        self.chain(self.v.sin(), self.v.cos())
    }

    pub fn cos(self) -> Jet {
        self.chain(self.v.cos(), -self.v.sin())
    }

    pub fn tan(self) -> Jet {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }

    pub fn atan(self) -> Jet {
        self.chain(self.v.atan(), 1.0 / (1.0 + self.v * self.v))
    }

    pub fn tanh(self) -> Jet {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }

    pub fn atanh(self) -> Jet {
        self.chain(self.v.atanh(), 1.0 / (1.0 - self.v * self.v))
    }

}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
