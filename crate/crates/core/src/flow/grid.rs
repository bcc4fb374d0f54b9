//! The d-cutoff and the desingularizing coordinate change.

use crate::error::{Error, Result};

/// Width of the linear end zones of the cutoff and of the power-law patches.
pub const EPS: f64 = 0.25;

/// `d(s)` and its first two derivatives. Linear on the end zones, and on
/// the middle the even quartic `0.40625 - 3y² + 8y⁴` in `y = s - 1/2`,
/// which matches value, slope and curvature at `s = ε, 1 - ε`.
pub fn d_cutoff_jet(s: f64) -> [f64; 3] {
    if s < EPS {
        [s, 1.0, 0.0]
    } else if s > 1.0 - EPS {
        [1.0 - s, -1.0, 0.0]
    } else {
        let y = s - 0.5;
        let y2 = y * y;
        [0.40625 - 3.0 * y2 + 8.0 * y2 * y2, -6.0 * y + 32.0 * y * y2, -6.0 + 96.0 * y2]
    }
}

/// As [`d_cutoff_jet`], with `s_rev = 1 - s` supplied to full precision.
pub fn d_cutoff_pair(s: f64, s_rev: f64) -> [f64; 3] {
    if s_rev < EPS {
        [s_rev, -1.0, 0.0]
    } else {
        d_cutoff_jet(s)
    }
}

pub fn d_cutoff(s: f64) -> f64 {
    d_cutoff_jet(s)[0]
}

/// A point of the desingularized grid: `s`, the complement `1 - s` kept
/// to full relative precision, and `dx/ds`, `d²x/ds²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub s: f64,
    pub s_rev: f64,
    pub dx: f64,
    pub ddx: f64,
}

/// `x(s)`: `x = c₀ s^{1+β₀}` on `[0, ε]`, `1 - x = c₁ (1-s)^{1+β₁}` on
/// `[1-ε, 1]`, and a quintic matched to value and two derivatives between.
/// The constants `c_j = ε^{-β_j}` make both patches meet the diagonal at
/// the patch boundaries.
#[derive(Clone, Debug)]
pub struct DesingularMap {
    p: [f64; 2],
    c: [f64; 2],
    /// Quintic coefficients in `y = s - ε`.
    q: [f64; 6],
}

fn solve6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> [f64; 6] {
    for col in 0..6 {
        let piv = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..6 {
            let f = a[row][col] / a[col][col];
            for k in col..6 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 6];
    for row in (0..6).rev() {
        let s: f64 = (row + 1..6).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

impl DesingularMap {
    pub fn new(beta0: f64, beta1: f64) -> Result<Self> {
        for b in [beta0, beta1] {
            if !(b > -1.0 && b <= 0.0) {
                return Err(Error::Domain(format!("cone order {b} outside (-1, 0]")));
            }
        }
        let p = [1.0 + beta0, 1.0 + beta1];
        let c = [EPS.powf(1.0 - p[0]), EPS.powf(1.0 - p[1])];
        let w = 1.0 - 2.0 * EPS;
        let left = [EPS, p[0], p[0] * (p[0] - 1.0) / EPS];
        let right = [1.0 - EPS, p[1], -p[1] * (p[1] - 1.0) / EPS];
        let mut a = [[0.0; 6]; 6];
        let mut rhs = [0.0; 6];
        for (r, (y, vals)) in [(0.0, left), (w, right)].into_iter().enumerate() {
            for k in 0..6 {
                let kf = k as f64;
                a[3 * r][k] = y.powi(k as i32);
                a[3 * r + 1][k] = if k >= 1 { kf * y.powi(k as i32 - 1) } else { 0.0 };
                a[3 * r + 2][k] = if k >= 2 { kf * (kf - 1.0) * y.powi(k as i32 - 2) } else { 0.0 };
            }
            rhs[3 * r..3 * r + 3].copy_from_slice(&vals);
        }
        let q = solve6(a, rhs);
        let map = DesingularMap { p, c, q };
        // the blend must be strictly increasing
        for i in 0..=2000 {
            let s = EPS + w * i as f64 / 2000.0;
            if !(map.middle(s)[1] > 0.0) {
                return Err(Error::Domain(format!("desingularizing blend not monotone for β = ({beta0}, {beta1})")));
            }
        }
        Ok(map)
    }

    fn middle(&self, s: f64) -> [f64; 3] {
        let y = s - EPS;
        let q = &self.q;
        let v = q[0] + y * (q[1] + y * (q[2] + y * (q[3] + y * (q[4] + y * q[5]))));
        let d = q[1] + y * (2.0 * q[2] + y * (3.0 * q[3] + y * (4.0 * q[4] + y * 5.0 * q[5])));
        let dd = 2.0 * q[2] + y * (6.0 * q[3] + y * (12.0 * q[4] + y * 20.0 * q[5]));
        [v, d, dd]
    }

    /// `[x, x', x'']` at `s`; `s_rev = 1 - s` must be supplied precisely.
    pub fn x_jet(&self, s: f64, s_rev: f64) -> [f64; 3] {
        if s <= EPS {
            let (p, c) = (self.p[0], self.c[0]);
            if s == 0.0 {
                return [0.0, if p == 1.0 { 1.0 } else { f64::INFINITY }, 0.0];
            }
            let sp = s.powf(p - 2.0);
            [c * sp * s * s, c * p * sp * s, c * p * (p - 1.0) * sp]
        } else if s_rev <= EPS {
            let (p, c) = (self.p[1], self.c[1]);
            if s_rev == 0.0 {
                return [1.0, if p == 1.0 { 1.0 } else { f64::INFINITY }, 0.0];
            }
            let sp = s_rev.powf(p - 2.0);
            [1.0 - c * sp * s_rev * s_rev, c * p * sp * s_rev, -c * p * (p - 1.0) * sp]
        } else {
            self.middle(s)
        }
    }

    pub fn x_of_s(&self, s: f64) -> f64 {
        self.x_jet(s, 1.0 - s)[0]
    }

    /// Inverse map, returning `(s, 1 - s)` with both to full precision.
    pub fn s_of_x(&self, x: f64) -> (f64, f64) {
        if x <= EPS {
            let s = (x / self.c[0]).powf(1.0 / self.p[0]);
            (s, 1.0 - s)
        } else if x >= 1.0 - EPS {
            let r = ((1.0 - x) / self.c[1]).powf(1.0 / self.p[1]);
            (1.0 - r, r)
        } else {
            let (mut lo, mut hi) = (EPS, 1.0 - EPS);
            let mut s = x;
            for _ in 0..100 {
                let [v, d, _] = self.middle(s);
                let f = v - x;
                if f > 0.0 {
                    hi = s;
                } else {
                    lo = s;
                }
                let n = s - f / d;
                let next = if n > lo && n < hi { n } else { 0.5 * (lo + hi) };
                if (next - s).abs() <= 1e-16 {
                    s = next;
                    break;
                }
                s = next;
            }
            (s, 1.0 - s)
        }
    }

    /// Grid point at desingularized coordinate `x`.
    pub fn point(&self, x: f64) -> GridPoint {
        let (s, s_rev) = self.s_of_x(x);
        let [_, dx, ddx] = self.x_jet(s, s_rev);
        GridPoint { x, s, s_rev, dx, ddx }
    }
}
