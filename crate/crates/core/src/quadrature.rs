//! Adaptive quadrature: global Gauss-Kronrod on intervals, power-law graded
//! substitutions for integrable endpoint singularities, and Duffy-mapped
//! tensor rules on triangles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-8, abs_tol: 1e-13, max_depth: 40, max_intervals: 20_000 }
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    let (k, g) = (k * h, g * h);
    if !k.is_finite() {
        return Err(Error::Accuracy(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok((k, (k - g).abs()))
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss-Kronrod 7/15 integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (val, err) = kronrod(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, val, err, depth: 0 });
    let (mut total, mut total_err) = (val, err);
    loop {
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(total);
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Accuracy(format!(
                "quadrature did not converge: error {total_err:e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        if worst.depth >= opts.max_depth {
            return Err(Error::Accuracy(format!(
                "quadrature reached depth {} near [{}, {}] with error {:e}",
                worst.depth, worst.a, worst.b, total_err
            )));
        }
        let m = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod(&mut f, worst.a, m)?;
        let (v2, e2) = kronrod(&mut f, m, worst.b)?;
        total += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: m, val: v1, err: e1, depth: worst.depth + 1 });
        heap.push(Piece { a: m, b: worst.b, val: v2, err: e2, depth: worst.depth + 1 });
    }
}

/// Integrates `g(τ)` over `τ ∈ (0, len]` where `g` may behave like `τ^e`
/// (e in (-1, 0]) as `τ → 0`. The substitution `τ = len v^{1/(1+e)}` turns
/// the power singularity into a bounded integrand. Callers pass `τ` as an
/// offset so that no precision is lost next to the singular end.
pub fn integrate_power_end<G: FnMut(f64) -> f64>(mut g: G, len: f64, e: f64, opts: &QuadOptions) -> Result<f64> {
    let q = 1.0 / (1.0 + e);
    integrate(
        |v: f64| {
            let tau = len * v.powf(q);
            if tau == 0.0 {
                return 0.0;
            }
            g(tau) * len * q * v.powf(q - 1.0)
        },
        0.0,
        1.0,
        opts,
    )
}

/// Integrates `f` over `[a, b]` where `f` may behave like `|t - a|^ea` near
/// `a` and `|t - b|^eb` near `b`. Resolution next to a singular end is
/// limited by how finely `a + τ` can be represented; use
/// [`integrate_power_end`] with offsets when that matters.
pub fn integrate_graded<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    ea: Option<f64>,
    eb: Option<f64>,
    opts: &QuadOptions,
) -> Result<f64> {
    let mut left = |tau: f64| {
        let t = a + tau;
        if t == a {
            0.0
        } else {
            f(t)
        }
    };
    match (ea, eb) {
        (None, None) => integrate(f, a, b, opts),
        (Some(e), None) => integrate_power_end(left, b - a, e, opts),
        (None, Some(e)) => integrate_power_end(
            |tau: f64| {
                let t = b - tau;
                if t == b {
                    0.0
                } else {
                    f(t)
                }
            },
            b - a,
            e,
            opts,
        ),
        (Some(e0), Some(e1)) => {
            let m = 0.5 * (a + b);
            let l = integrate_power_end(&mut left, m - a, e0, opts)?;
            let r = integrate_power_end(
                |tau: f64| {
                    let t = b - tau;
                    if t == b {
                        0.0
                    } else {
                        f(t)
                    }
                },
                b - m,
                e1,
                opts,
            )?;
            Ok(l + r)
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(8))
}

pub fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(20))
}

/// Fixed 20-point Gauss-Legendre rule on [a, b].
pub fn fixed_gl20<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let (x, w) = gl20();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

fn tensor_rule<G: FnMut(f64, f64) -> f64>(g: &mut G, u0: f64, u1: f64, v0: f64, v1: f64) -> f64 {
    let (x, w) = gl8();
    let (cu, hu) = (0.5 * (u0 + u1), 0.5 * (u1 - u0));
    let (cv, hv) = (0.5 * (v0 + v1), 0.5 * (v1 - v0));
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        for (xj, wj) in x.iter().zip(w) {
            s += wi * wj * g(cu + hu * xi, cv + hv * xj);
        }
    }
    s * hu * hv
}

fn adapt_square<G: FnMut(f64, f64) -> f64>(
    g: &mut G,
    rect: [f64; 4],
    coarse: f64,
    tol: f64,
    floor: f64,
    depth: u32,
    budget: &mut usize,
) -> Result<f64> {
    let [u0, u1, v0, v1] = rect;
    let (um, vm) = (0.5 * (u0 + u1), 0.5 * (v0 + v1));
    let kids = [[u0, um, v0, vm], [um, u1, v0, vm], [u0, um, vm, v1], [um, u1, vm, v1]];
    let vals: Vec<f64> = kids.iter().map(|r| tensor_rule(g, r[0], r[1], r[2], r[3])).collect();
    let fine: f64 = vals.iter().sum();
    if !fine.is_finite() {
        return Err(Error::Accuracy("non-finite integrand on triangle".into()));
    }
    let diff = (fine - coarse).abs();
    if diff <= tol.max(floor).max(1e-12 * fine.abs()) {
        return Ok(fine);
    }
    if depth >= 30 || *budget == 0 {
        if diff <= 1e-9 * fine.abs() {
            return Ok(fine);
        }
        return Err(Error::Accuracy(format!(
            "triangle quadrature did not converge: difference {:e} > {tol:e}",
            (fine - coarse).abs()
        )));
    }
    *budget -= 1;
    let mut s = 0.0;
    for (r, v) in kids.iter().zip(vals) {
        s += adapt_square(g, *r, v, 0.5 * tol, floor, depth + 1, budget)?;
    }
    Ok(s)
}

/// Signed integral of `f` over the triangle (p, b, c). If `exponent` is
/// given, `f` may blow up like `|x - p|^exponent` (exponent > -2) at `p`.
pub fn integrate_triangle<F: FnMut(Vec2) -> f64>(
    mut f: F,
    p: Vec2,
    b: Vec2,
    c: Vec2,
    exponent: Option<f64>,
    abs_tol: f64,
) -> Result<f64> {
    let det = (b - p).cross(c - p);
    if det == 0.0 {
        return Ok(0.0);
    }
    let q = 1.0 / (2.0 + exponent.unwrap_or(0.0));
    let mut g = |w: f64, v: f64| {
        let u = w.powf(q);
        if u == 0.0 {
            return 0.0;
        }
        let x = p + u * (b - p) + (u * v) * (c - b);
        f(x) * det * q * w.powf(2.0 * q - 1.0)
    };
    let coarse = tensor_rule(&mut g, 0.0, 1.0, 0.0, 1.0);
    // rounding level of the whole integral; finer squares cannot resolve below it
    let floor = 1e-13 * tensor_rule(&mut |w, v| g(w, v).abs(), 0.0, 1.0, 0.0, 1.0);
    let mut budget = 20000;
    adapt_square(&mut g, [0.0, 1.0, 0.0, 1.0], coarse, abs_tol, floor, 0, &mut budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kronrod_smooth_integral() {
        let v = integrate(|t| t.exp() * t.cos(), 0.0, 3.0, &QuadOptions::default()).unwrap();
        let exact = {
            let f = |t: f64| 0.5 * t.exp() * (t.cos() + t.sin());
            f(3.0) - f(0.0)
        };
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn graded_endpoint_singularities() {
        let opts = QuadOptions::default();
        for beta in [-0.9, -0.5, -0.2] {
            let v = integrate_graded(|t: f64| t.powf(beta), 0.0, 2.0, Some(beta), None, &opts).unwrap();
            let exact = 2f64.powf(1.0 + beta) / (1.0 + beta);
            assert!((v - exact).abs() < 1e-8 * exact, "beta {beta}: {v} vs {exact}");
            let v = integrate_graded(|t: f64| (-t).powf(beta), -2.0, 0.0, None, Some(beta), &opts).unwrap();
            assert!((v - exact).abs() < 1e-8 * exact);
            // ∫_0^1 τ^β (1 + τ) dτ with τ passed as an offset
            let v = integrate_power_end(|tau: f64| tau.powf(beta) * (1.0 + tau), 1.0, beta, &opts).unwrap();
            let exact = 1.0 / (1.0 + beta) + 1.0 / (2.0 + beta);
            assert!((v - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn unconverged_singularity_reports_accuracy_error() {
        let opts = QuadOptions { max_intervals: 50, ..QuadOptions::default() };
        let r = integrate(|t: f64| t.powf(-0.95), 0.0, 1.0, &opts);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }

    #[test]
    fn triangle_with_singular_vertex() {
        // |x|^{2b} over the quarter disk sector approximated by a triangle is
        // awkward, so integrate over the triangle and compare with polar form.
        let b = -0.6;
        let p = Vec2::ZERO;
        let v = integrate_triangle(|x| x.norm().powf(2.0 * b), p, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Some(2.0 * b), 1e-11)
            .unwrap();
        // polar: ∫_0^{π/2} ∫_0^{R(θ)} r^{2b+1} dr dθ, R = 1/(cos θ + sin θ)
        let exact = integrate(
            |th: f64| (1.0 / (th.cos() + th.sin())).powf(2.0 * b + 2.0) / (2.0 * b + 2.0),
            0.0,
            std::f64::consts::FRAC_PI_2,
            &QuadOptions { rel_tol: 1e-13, ..Default::default() },
        )
        .unwrap();
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
    }
}
