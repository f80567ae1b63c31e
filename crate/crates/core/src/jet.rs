//! Second-order forward-mode differentiation in two variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by plain floats and jets.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn value(self) -> f64;

    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return Self::cst(1.0) / self.powi(-n);
        }
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn value(self) -> f64 {
        self
    }
}

/// Value, gradient and Hessian (h11, h12, h22).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl Jet {
    pub fn var(v: f64, index: usize) -> Jet {
        let mut g = [0.0; 2];
        g[index] = 1.0;
        Jet { v, g, h: [0.0; 3] }
    }

    /// Composition with a scalar function given its value and first two derivatives.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Jet {
        let g = self.g;
        Jet {
            v: f,
            g: [df * g[0], df * g[1]],
            h: [
                df * self.h[0] + d2f * g[0] * g[0],
                df * self.h[1] + d2f * g[0] * g[1],
                df * self.h[2] + d2f * g[1] * g[1],
            ],
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, g: self.g.map(|x| -x), h: self.h.map(|x| -x) }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            g: [a.g[0] * b.v + a.v * b.g[0], a.g[1] * b.v + a.v * b.g[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.g[0] * b.g[0] + a.v * b.h[0],
                a.h[1] * b.v + a.g[0] * b.g[1] + a.g[1] * b.g[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.g[1] * b.g[1] + a.v * b.h[2],
            ],
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.chain(1.0 / o.v, -1.0 / (o.v * o.v), 2.0 / (o.v * o.v * o.v));
        self * inv
    }
}

impl Real for Jet {
    fn cst(v: f64) -> Self {
        Jet { v, g: [0.0; 2], h: [0.0; 3] }
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn powf(self, p: f64) -> Self {
        let x = self.v;
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }
    fn value(self) -> f64 {
        self.v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Jet::var(0.3, 0);
        let y = Jet::var(0.7, 1);
        let f = x * x * y + Jet::cst(2.0) * y / x;
        // f = x^2 y + 2y/x
        let (xv, yv) = (0.3f64, 0.7f64);
        assert!((f.v - (xv * xv * yv + 2.0 * yv / xv)).abs() < 1e-14);
        assert!((f.g[0] - (2.0 * xv * yv - 2.0 * yv / (xv * xv))).abs() < 1e-12);
        assert!((f.g[1] - (xv * xv + 2.0 / xv)).abs() < 1e-12);
        assert!((f.h[0] - (2.0 * yv + 4.0 * yv / xv.powi(3))).abs() < 1e-10);
        assert!((f.h[1] - (2.0 * xv - 2.0 / (xv * xv))).abs() < 1e-12);
        assert!(f.h[2].abs() < 1e-14);
        let s = (x * y).sin();
        assert!((s.h[1] - ((xv * yv).cos() - xv * yv * (xv * yv).sin())).abs() < 1e-14);
    }
}
