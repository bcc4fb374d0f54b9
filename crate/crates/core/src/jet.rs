//! Forward-mode derivative jets up to third order.
//!
//! A `Jet` carries `[f, f', f'', f''']` of a scalar function of one
//! parameter. Analytic fixtures are written once against `Jet` and get
//! exact derivatives for free.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet(pub [f64; 4]);

impl Jet {
    pub fn var(t: f64) -> Jet {
        Jet([t, 1.0, 0.0, 0.0])
    }

    pub fn constant(c: f64) -> Jet {
        Jet([c, 0.0, 0.0, 0.0])
    }

    pub fn value(self) -> f64 {
        self.0[0]
    }

    /// Chain rule for `phi(self)` given `[phi, phi', phi'', phi''']` at the value.
    fn compose(self, p: [f64; 4]) -> Jet {
        let [_, f1, f2, f3] = self.0;
        Jet([
            p[0],
            p[1] * f1,
            p[2] * f1 * f1 + p[1] * f2,
            p[3] * f1 * f1 * f1 + 3.0 * p[2] * f1 * f2 + p[1] * f3,
        ])
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.0[0].sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.0[0].sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(self) -> Jet {
        let e = self.0[0].exp();
        self.compose([e, e, e, e])
    }

    pub fn ln(self) -> Jet {
        let x = self.0[0];
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    pub fn powf(self, a: f64) -> Jet {
        let x = self.0[0];
        self.compose([
            x.powf(a),
            a * x.powf(a - 1.0),
            a * (a - 1.0) * x.powf(a - 2.0),
            a * (a - 1.0) * (a - 2.0) * x.powf(a - 3.0),
        ])
    }

    pub fn sqrt(self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(self) -> Jet {
        let x = self.0[0];
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn scale(self, s: f64) -> Jet {
        Jet(self.0.map(|c| c * s))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let [f0, f1, f2, f3] = self.0;
        let [g0, g1, g2, g3] = o.0;
        Jet([
            f0 * g0,
            f1 * g0 + f0 * g1,
            f2 * g0 + 2.0 * f1 * g1 + f0 * g2,
            f3 * g0 + 3.0 * f2 * g1 + 3.0 * f1 * g2 + f0 * g3,
        ])
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.0[0] += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, c: f64) -> Jet {
        self.0[0] -= c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_closed_form_derivatives() {
        // f(t) = sin(t) e^{2t} / (1 + t^2)
        let t = 0.7;
        let x = Jet::var(t);
        let f = x.sin() * (x * 2.0).exp() / (x * x + 1.0);
        let g = |t: f64| t.sin() * (2.0 * t).exp() / (1.0 + t * t);
        let h = 1e-3;
        let d1 = (g(t + h) - g(t - h)) / (2.0 * h);
        let d2 = (g(t + h) - 2.0 * g(t) + g(t - h)) / (h * h);
        let d3 = (g(t + 2.0 * h) - 2.0 * g(t + h) + 2.0 * g(t - h) - g(t - 2.0 * h)) / (2.0 * h * h * h);
        assert!((f.0[0] - g(t)).abs() < 1e-14);
        assert!((f.0[1] - d1).abs() < 1e-5);
        assert!((f.0[2] - d2).abs() < 1e-4);
        assert!((f.0[3] - d3).abs() < 1e-3);
    }

    #[test]
    fn power_and_log_are_inverse() {
        let x = Jet::var(1.3);
        let y = x.powf(2.5).ln().scale(1.0 / 2.5);
        let z = x.ln();
        for i in 0..4 {
            assert!((y.0[i] - z.0[i]).abs() < 1e-12);
        }
    }
}
