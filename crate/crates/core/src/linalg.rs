//! Banded solvers used by splines and the implicit flow steps.

use crate::error::{Error, Result};

/// Solves a tridiagonal system with sub-diagonal `a` (a[0] unused),
/// diagonal `b` and super-diagonal `c` (c[n-1] unused).
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || c.len() != n || rhs.len() != n {
        return Err(Error::Input("tridiagonal band lengths differ".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut denom = b[0];
    if denom == 0.0 {
        return Err(Error::Accuracy("zero pivot in tridiagonal solve".into()));
    }
    cp[0] = c[0] / denom;
    dp[0] = rhs[0] / denom;
    for i in 1..n {
        denom = b[i] - a[i] * cp[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Accuracy("zero pivot in tridiagonal solve".into()));
        }
        cp[i] = if i + 1 < n { c[i] / denom } else { 0.0 };
        dp[i] = (rhs[i] - a[i] * dp[i - 1]) / denom;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

/// Cyclic tridiagonal solve: `a[0]` couples row 0 to the last unknown and
/// `c[n-1]` couples the last row to unknown 0. Sherman-Morrison on Thomas.
pub fn solve_cyclic_tridiagonal(a: &[f64], b: &[f64], c: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if n < 3 {
        return Err(Error::Input("cyclic system needs at least 3 unknowns".into()));
    }
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(a, &bb, c, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(a, &bb, c, &u)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(a: &[f64], b: &[f64], c: &[f64], x: &[f64], cyclic: bool) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = b[i] * x[i];
                if i > 0 {
                    s += a[i] * x[i - 1];
                } else if cyclic {
                    s += a[0] * x[n - 1];
                }
                if i + 1 < n {
                    s += c[i] * x[i + 1];
                } else if cyclic {
                    s += c[n - 1] * x[0];
                }
                s
            })
            .collect()
    }

    #[test]
    fn thomas_recovers_solution() {
        let n = 9;
        let a: Vec<f64> = (0..n).map(|i| -1.0 + 0.1 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 4.0 + (i as f64).sin()).collect();
        let c: Vec<f64> = (0..n).map(|i| 0.5 - 0.05 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let r = apply(&a, &b, &c, &x, false);
        let y = solve_tridiagonal(&a, &b, &c, &r).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_recovers_solution() {
        let n = 12;
        let a: Vec<f64> = (0..n).map(|i| -1.0 - 0.02 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| 3.0).collect();
        let c: Vec<f64> = (0..n).map(|i| -0.7 + 0.01 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin() + 0.2).collect();
        let r = apply(&a, &b, &c, &x, true);
        let y = solve_cyclic_tridiagonal(&a, &b, &c, &r).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
