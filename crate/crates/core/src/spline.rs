//! Cubic interpolating splines in second-derivative form.

use crate::error::{Error, Result};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplineBoundary {
    Natural,
    /// Prescribed first derivatives at the two ends.
    Clamped(f64, f64),
    NotAKnot,
    /// Requires equal end values.
    Periodic,
}

#[derive(Clone, Debug)]
pub struct CubicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    periodic: bool,
}

impl CubicSpline {
    pub fn new(t: &[f64], y: &[f64], bc: SplineBoundary) -> Result<Self> {
        let n = t.len();
        if n != y.len() {
            return Err(Error::Input("spline knots and values differ in length".into()));
        }
        if n < 2 {
            return Err(Error::Input("spline needs at least two knots".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("spline knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let segs = n - 1;
        let m = match bc {
            SplineBoundary::Natural => {
                let mut m = vec![0.0; n];
                if segs >= 2 {
                    let k = segs - 1;
                    let (mut a, mut b, mut c, mut r) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
                    for j in 0..k {
                        let i = j + 1;
                        a[j] = h[i - 1];
                        b[j] = 2.0 * (h[i - 1] + h[i]);
                        c[j] = h[i];
                        r[j] = 6.0 * (d[i] - d[i - 1]);
                    }
                    let x = solve_tridiagonal(&a, &b, &c, &r)?;
                    m[1..n - 1].copy_from_slice(&x);
                }
                m
            }
            SplineBoundary::Clamped(d0, d1) => {
                let (mut a, mut b, mut c, mut r) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
                b[0] = 2.0 * h[0];
                c[0] = h[0];
                r[0] = 6.0 * (d[0] - d0);
                for i in 1..n - 1 {
                    a[i] = h[i - 1];
                    b[i] = 2.0 * (h[i - 1] + h[i]);
                    c[i] = h[i];
                    r[i] = 6.0 * (d[i] - d[i - 1]);
                }
                a[n - 1] = h[n - 2];
                b[n - 1] = 2.0 * h[n - 2];
                r[n - 1] = 6.0 * (d1 - d[n - 2]);
                solve_tridiagonal(&a, &b, &c, &r)?
            }
            SplineBoundary::NotAKnot => match segs {
                1 => vec![0.0; 2],
                2 => {
                    let c2 = 2.0 * (d[1] - d[0]) / (h[0] + h[1]);
                    vec![c2; 3]
                }
                _ => {
                    let k = segs - 1;
                    let (mut a, mut b, mut c, mut r) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
                    for j in 0..k {
                        let i = j + 1;
                        a[j] = h[i - 1];
                        b[j] = 2.0 * (h[i - 1] + h[i]);
                        c[j] = h[i];
                        r[j] = 6.0 * (d[i] - d[i - 1]);
                    }
                    // M0 = (1 + h0/h1) M1 - (h0/h1) M2, and symmetrically at the far end.
                    let q0 = h[0] / h[1];
                    b[0] += h[0] * (1.0 + q0);
                    c[0] -= h[0] * q0;
                    let q1 = h[segs - 1] / h[segs - 2];
                    b[k - 1] += h[segs - 1] * (1.0 + q1);
                    a[k - 1] -= h[segs - 1] * q1;
                    let x = solve_tridiagonal(&a, &b, &c, &r)?;
                    let mut m = vec![0.0; n];
                    m[1..n - 1].copy_from_slice(&x);
                    m[0] = (1.0 + q0) * m[1] - q0 * m[2];
                    m[n - 1] = (1.0 + q1) * m[n - 2] - q1 * m[n - 3];
                    m
                }
            },
            SplineBoundary::Periodic => {
                if segs < 3 {
                    return Err(Error::Input("periodic spline needs at least 4 knots".into()));
                }
                if (y[0] - y[n - 1]).abs() > 1e-12 * (1.0 + y[0].abs()) {
                    return Err(Error::Input("periodic spline needs equal end values".into()));
                }
                let (mut a, mut b, mut c, mut r) = (vec![0.0; segs], vec![0.0; segs], vec![0.0; segs], vec![0.0; segs]);
                for i in 0..segs {
                    let ip = (i + segs - 1) % segs;
                    a[i] = h[ip];
                    b[i] = 2.0 * (h[ip] + h[i]);
                    c[i] = h[i];
                    r[i] = 6.0 * (d[i] - d[ip]);
                }
                let x = solve_cyclic_tridiagonal(&a, &b, &c, &r)?;
                let mut m = x;
                m.push(m[0]);
                m
            }
        };
        Ok(CubicSpline { t: t.to_vec(), y: y.to_vec(), m, periodic: bc == SplineBoundary::Periodic })
    }

    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.t.len();
        let i = self.t.partition_point(|&tk| tk <= x);
        i.clamp(1, n - 1) - 1
    }

    /// Value and first three derivatives at `x`.
    pub fn eval(&self, x: f64) -> [f64; 4] {
        let (t0, t1) = self.domain();
        let x = if self.periodic && (x < t0 || x > t1) { t0 + (x - t0).rem_euclid(t1 - t0) } else { x };
        let i = self.segment(x);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - x) / h;
        let b = (x - self.t[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let y = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d1 = (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        let d2 = a * mi + b * mj;
        let d3 = (mj - mi) / h;
        [y, d1, d2, d3]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    /// `[y(t_end ± tau) - y(t_end), y', y'', y''']` near one end, evaluated
    /// without cancellation against the end value. `end` is 0 or 1.
    pub fn offset_from_end(&self, end: usize, tau: f64) -> [f64; 4] {
        let n = self.t.len();
        if end == 0 {
            let h = self.t[1] - self.t[0];
            let (m0, m1) = (self.m[0], self.m[1]);
            let s0 = (self.y[1] - self.y[0]) / h - h * (2.0 * m0 + m1) / 6.0;
            let d3 = (m1 - m0) / h;
            let off = tau * (s0 + tau * (0.5 * m0 + tau * d3 / 6.0));
            [off, s0 + tau * (m0 + 0.5 * tau * d3), m0 + tau * d3, d3]
        } else {
            let h = self.t[n - 1] - self.t[n - 2];
            let (ma, mb) = (self.m[n - 2], self.m[n - 1]);
            let s1 = (self.y[n - 1] - self.y[n - 2]) / h + h * (ma + 2.0 * mb) / 6.0;
            let d3 = (mb - ma) / h;
            let off = tau * (-s1 + tau * (0.5 * mb - tau * d3 / 6.0));
            [off, s1 - tau * (mb - 0.5 * tau * d3), mb - tau * d3, d3]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn not_a_knot_reproduces_cubics() {
        let t: Vec<f64> = vec![0.0, 0.3, 0.45, 1.0, 1.7, 2.0];
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 0.25 * x * x * x;
        let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        let s = CubicSpline::new(&t, &y, SplineBoundary::NotAKnot).unwrap();
        for x in [0.1, 0.44, 1.33, 1.99] {
            let e = s.eval(x);
            assert!((e[0] - f(x)).abs() < 1e-12);
            assert!((e[1] - (-2.0 + x + 0.75 * x * x)).abs() < 1e-11);
            assert!((e[2] - (1.0 + 1.5 * x)).abs() < 1e-10);
            assert!((e[3] - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn clamped_reproduces_cubics() {
        let t: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let f = |x: f64| x * x * x - x;
        let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        let s = CubicSpline::new(&t, &y, SplineBoundary::Clamped(-1.0, 3.0 * 9.0 - 1.0)).unwrap();
        assert!((s.value(1.3) - f(1.3)).abs() < 1e-12);
    }

    #[test]
    fn periodic_sine() {
        let n = 64;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 * std::f64::consts::TAU / n as f64).collect();
        let mut y: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        y[n] = y[0];
        let s = CubicSpline::new(&t, &y, SplineBoundary::Periodic).unwrap();
        for x in [0.0, 0.3, 3.0, 6.2] {
            let e = s.eval(x);
            assert!((e[0] - x.sin()).abs() < 1e-6);
            assert!((e[1] - x.cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn end_offsets_match_direct_evaluation() {
        let t: Vec<f64> = vec![0.0, 0.2, 0.5, 0.9, 1.4];
        let y: Vec<f64> = t.iter().map(|x: &f64| (2.0 * x).sin() + 3.0).collect();
        let s = CubicSpline::new(&t, &y, SplineBoundary::NotAKnot).unwrap();
        let tau = 0.07;
        let a = s.offset_from_end(0, tau);
        let b = s.eval(tau);
        assert!((a[0] - (b[0] - y[0])).abs() < 1e-14);
        assert!((a[1] - b[1]).abs() < 1e-13 && (a[2] - b[2]).abs() < 1e-12);
        let a = s.offset_from_end(1, tau);
        let b = s.eval(1.4 - tau);
        assert!((a[0] - (b[0] - y[4])).abs() < 1e-14);
        assert!((a[1] - b[1]).abs() < 1e-13 && (a[2] - b[2]).abs() < 1e-12);
    }
}
