//! Conformal conical metrics `g = e^{2h} Π_j |z - p_j|^{2β_j} |dz|²` on a
//! planar chart.

use serde::{Deserialize, Serialize};

use crate::curve::ParametricCurve;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_graded, integrate_triangle, QuadOptions};
use crate::vec2::Vec2;

/// Bivariate polynomial with coefficients in graded order:
/// `1, x, y, x², xy, y², x³, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial2 {
    degree: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Polynomial2 {
    type Error = Error;
    fn try_from(c: Vec<f64>) -> Result<Self> {
        Polynomial2::new(c)
    }
}

impl From<Polynomial2> for Vec<f64> {
    fn from(p: Polynomial2) -> Self {
        p.coeffs
    }
}

impl Polynomial2 {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Ok(Polynomial2::zero());
        }
        let mut degree = 0;
        while (degree + 1) * (degree + 2) / 2 < coeffs.len() {
            degree += 1;
        }
        if (degree + 1) * (degree + 2) / 2 != coeffs.len() {
            return Err(Error::Config(format!(
                "polynomial coefficient count {} is not a triangular number",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("non-finite polynomial coefficient".into()));
        }
        Ok(Polynomial2 { degree, coeffs })
    }

    pub fn zero() -> Self {
        Polynomial2 { degree: 0, coeffs: vec![0.0] }
    }

    /// Index of the coefficient of `x^i y^j`.
    pub fn index(i: usize, j: usize) -> usize {
        let n = i + j;
        n * (n + 1) / 2 + j
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs.get(Self::index(i, j)).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// True when the Laplacian vanishes identically.
    pub fn is_harmonic(&self) -> bool {
        let d = self.degree;
        (0..=d).all(|i| {
            (0..=d - i).all(|j| {
                let cxx = if i + 2 + j <= d { (i + 2) as f64 * (i + 1) as f64 * self.coeff(i + 2, j) } else { 0.0 };
                let cyy = if i + j + 2 <= d { (j + 2) as f64 * (j + 1) as f64 * self.coeff(i, j + 2) } else { 0.0 };
                cxx + cyy == 0.0
            })
        })
    }

    fn powers(v: f64, n: usize) -> Vec<f64> {
        let mut p = vec![1.0; n + 1];
        for k in 1..=n {
            p[k] = p[k - 1] * v;
        }
        p
    }

    /// Value, gradient and Laplacian at `z`.
    pub fn eval(&self, z: Vec2) -> (f64, Vec2, f64) {
        let d = self.degree;
        let px = Self::powers(z.x, d);
        let py = Self::powers(z.y, d);
        let (mut v, mut gx, mut gy, mut lap) = (0.0, 0.0, 0.0, 0.0);
        for n in 0..=d {
            for j in 0..=n {
                let i = n - j;
                let c = self.coeffs[Self::index(i, j)];
                if c == 0.0 {
                    continue;
                }
                v += c * px[i] * py[j];
                if i >= 1 {
                    gx += c * i as f64 * px[i - 1] * py[j];
                }
                if j >= 1 {
                    gy += c * j as f64 * px[i] * py[j - 1];
                }
                if i >= 2 {
                    lap += c * (i * (i - 1)) as f64 * px[i - 2] * py[j];
                }
                if j >= 2 {
                    lap += c * (j * (j - 1)) as f64 * px[i] * py[j - 2];
                }
            }
        }
        (v, Vec2::new(gx, gy), lap)
    }

    pub fn value(&self, z: Vec2) -> f64 {
        self.eval(z).0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub x: f64,
    pub y: f64,
    pub beta: f64,
}

impl ConePoint {
    pub fn new(position: Vec2, beta: f64) -> Self {
        ConePoint { x: position.x, y: position.y, beta }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Precisely known offset `z - p_j` for one singular point, used where `z`
/// sits so close to `p_j` that forming the difference would cancel.
pub type Offset = Option<(usize, Vec2)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricSpec", into = "MetricSpec")]
pub struct ConicalMetric {
    points: Vec<ConePoint>,
    h: Polynomial2,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(default)]
    pub singular_points: Vec<ConePoint>,
    #[serde(default = "zero_coeffs")]
    pub h: Vec<f64>,
}

fn zero_coeffs() -> Vec<f64> {
    vec![0.0]
}

impl TryFrom<MetricSpec> for ConicalMetric {
    type Error = Error;
    fn try_from(s: MetricSpec) -> Result<Self> {
        ConicalMetric::new(s.singular_points, Polynomial2::new(s.h)?)
    }
}

impl From<ConicalMetric> for MetricSpec {
    fn from(m: ConicalMetric) -> Self {
        MetricSpec { singular_points: m.points, h: m.h.into() }
    }
}

impl ConicalMetric {
    pub fn new(points: Vec<ConePoint>, h: Polynomial2) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p.beta > -1.0 && p.beta < 0.0) {
                return Err(Error::Config(format!("cone order {} of point {i} is outside (-1, 0)", p.beta)));
            }
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Config(format!("singular point {i} is not finite")));
            }
            for (j, q) in points.iter().enumerate().take(i) {
                if p.position() == q.position() {
                    return Err(Error::Config(format!("singular points {j} and {i} coincide")));
                }
            }
        }
        Ok(ConicalMetric { points, h })
    }

    pub fn euclidean() -> Self {
        ConicalMetric { points: Vec::new(), h: Polynomial2::zero() }
    }

    /// Flat cone `|z|^{2β}|dz|²` with its vertex at the origin.
    pub fn flat_cone(beta: f64) -> Result<Self> {
        Self::new(vec![ConePoint::new(Vec2::ZERO, beta)], Polynomial2::zero())
    }

    pub fn singular_points(&self) -> &[ConePoint] {
        &self.points
    }

    pub fn h(&self) -> &Polynomial2 {
        &self.h
    }

    pub fn is_flat(&self) -> bool {
        self.h.is_harmonic()
    }

    /// Index of the singular point at `z`, if any (within a relative 1e-12).
    pub fn singular_at(&self, z: Vec2) -> Option<usize> {
        self.points.iter().position(|p| (z - p.position()).norm() <= 1e-12 * (1.0 + p.position().norm()))
    }

    pub fn delta(&self, j: usize, z: Vec2, offset: Offset) -> Vec2 {
        match offset {
            Some((k, d)) if k == j => d,
            _ => z - self.points[j].position(),
        }
    }

    fn check(&self, z: Vec2, offset: Offset) -> Result<()> {
        for j in 0..self.points.len() {
            if self.delta(j, z, offset).norm2() == 0.0 {
                return Err(Error::SingularPoint { index: j, position: self.points[j].position() });
            }
        }
        Ok(())
    }

    /// `log λ(z)`.
    pub fn log_factor(&self, z: Vec2, offset: Offset) -> Result<f64> {
        self.check(z, offset)?;
        let mut s = 2.0 * self.h.value(z);
        for (j, p) in self.points.iter().enumerate() {
            s += p.beta * self.delta(j, z, offset).norm2().ln();
        }
        Ok(s)
    }

    pub fn conformal_factor_at(&self, z: Vec2, offset: Offset) -> Result<f64> {
        Ok(self.log_factor(z, offset)?.exp())
    }

    /// Gradient of `v = log λ^{1/2} = h + Σ β_j log|z - p_j|`.
    pub fn grad_v(&self, z: Vec2, offset: Offset) -> Result<Vec2> {
        self.check(z, offset)?;
        let (_, mut g, _) = self.h.eval(z);
        for (j, p) in self.points.iter().enumerate() {
            let d = self.delta(j, z, offset);
            g += (p.beta / d.norm2()) * d;
        }
        Ok(g)
    }
}

pub fn conformal_factor(metric: &ConicalMetric, z: Vec2) -> Result<f64> {
    metric.conformal_factor_at(z, None)
}

/// `K_g = -λ^{-1} Δh`; the cone factors are harmonic off their vertices.
pub fn gauss_curvature(metric: &ConicalMetric, z: Vec2) -> Result<f64> {
    let lam = metric.conformal_factor_at(z, None)?;
    let (_, _, lap) = metric.h.eval(z);
    Ok(-lap / lam)
}

/// Cone order of the singular point sitting at the given curve end, if any.
fn end_singularity<C: ParametricCurve + ?Sized>(metric: &ConicalMetric, curve: &C, end: usize) -> Option<usize> {
    metric.singular_at(curve.endpoint(end))
}

/// Metric length `∫ λ^{1/2} |γ'| dt`, graded toward singular endpoints.
pub fn metric_length<C: ParametricCurve + ?Sized>(metric: &ConicalMetric, curve: &C) -> Result<f64> {
    metric_length_with(metric, curve, &QuadOptions::default())
}

pub fn metric_length_with<C: ParametricCurve + ?Sized>(
    metric: &ConicalMetric,
    curve: &C,
    opts: &QuadOptions,
) -> Result<f64> {
    let bps = curve.breakpoints();
    let (a, b) = curve.domain();
    let ends = [end_singularity(metric, curve, 0), end_singularity(metric, curve, 1)];
    for &t in &bps[1..bps.len() - 1] {
        if let Some(j) = metric.singular_at(curve.jet(t).pos) {
            return Err(Error::SingularPoint { index: j, position: metric.points[j].position() });
        }
    }
    let speed = |t: f64| -> Result<f64> {
        let jet = curve.jet(t);
        Ok(metric.conformal_factor_at(jet.pos, None)?.sqrt() * jet.d1.norm())
    };
    let near_end = |end: usize, tau: f64| -> Result<f64> {
        let j = ends[end].expect("singular end");
        let (jet, off) = curve.jet_near_end(end, tau);
        if off.norm2() == 0.0 {
            return Ok(0.0);
        }
        Ok(metric.conformal_factor_at(jet.pos, Some((j, off)))?.sqrt() * jet.d1.norm())
    };
    let mut total = 0.0;
    let nseg = bps.len() - 1;
    for k in 0..nseg {
        let (t0, t1) = (bps[k], bps[k + 1]);
        let first = k == 0 && ends[0].is_some();
        let last = k == nseg - 1 && ends[1].is_some();
        let mut err = None;
        let mut trap = |r: Result<f64>| match r {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        };
        let piece = if !first && !last {
            integrate_graded(|t| trap(speed(t)), t0, t1, None, None, opts)
        } else if first && !last {
            let e = metric.points[ends[0].unwrap()].beta;
            integrate_graded(|tau| trap(near_end(0, tau)), 0.0, t1 - a, Some(e), None, opts)
        } else if !first && last {
            let e = metric.points[ends[1].unwrap()].beta;
            integrate_graded(|tau| trap(near_end(1, tau)), 0.0, b - t0, Some(e), None, opts)
        } else {
            let m = 0.5 * (t0 + t1);
            let e0 = metric.points[ends[0].unwrap()].beta;
            let e1 = metric.points[ends[1].unwrap()].beta;
            let l = integrate_graded(|tau| trap(near_end(0, tau)), 0.0, m - a, Some(e0), None, opts);
            l.and_then(|l| {
                integrate_graded(|tau| trap(near_end(1, tau)), 0.0, b - m, Some(e1), None, opts).map(|r| l + r)
            })
        };
        if let Some(e) = err {
            return Err(e);
        }
        total += piece?;
    }
    Ok(total)
}

fn polygon_is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if crate::curve::segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Strips a repeated closing node.
fn open_polygon(boundary: &[Vec2]) -> Vec<Vec2> {
    let mut p = boundary.to_vec();
    if p.len() > 1 && p[0] == p[p.len() - 1] {
        p.pop();
    }
    p
}

/// Signed integral of `f` over the polygon, where `f` may carry
/// `|z - p_j|^{2β_j}` singularities at the metric's singular points.
pub fn integrate_region<F: Fn(Vec2) -> f64>(
    metric: &ConicalMetric,
    boundary: &[Vec2],
    f: F,
    rel_tol: f64,
) -> Result<f64> {
    let poly = open_polygon(boundary);
    if poly.len() < 3 {
        return Err(Error::Geometry("region boundary needs at least 3 vertices".into()));
    }
    if !polygon_is_simple(&poly) {
        return Err(Error::Geometry("region boundary self-intersects".into()));
    }
    let n = poly.len();
    let centroid = poly.iter().fold(Vec2::ZERO, |s, &p| s + p) / n as f64;
    let diam = poly.iter().map(|p| p.dist(centroid)).fold(0.0, f64::max);
    // fan from a singular vertex, else an enclosed singular point; the signed
    // fan identity holds for any centre
    let c = poly
        .iter()
        .find_map(|&v| metric.singular_points().iter().map(|p| p.position()).find(|q| v.dist(*q) <= diam * 1e-13))
        .or_else(|| {
            metric.singular_points().iter().map(|p| p.position()).find(|&q| crate::curve::winding_number(&poly, q) != 0)
        })
        .unwrap_or(centroid);
    let mut tris = Vec::with_capacity(n);
    for i in 0..n {
        tris.push([c, poly[i], poly[(i + 1) % n]]);
    }
    // rough scale for an absolute tolerance
    let scale: f64 = tris
        .iter()
        .map(|t| {
            let m = (t[0] + t[1] + t[2]) / 3.0;
            let area = 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).abs();
            if metric.singular_at(m).is_some() {
                0.0
            } else {
                area * f(m).abs()
            }
        })
        .sum::<f64>()
        .max(1e-300);
    let tol = rel_tol * scale / n as f64;
    let mut total = 0.0;
    for t in tris {
        total += integrate_tri_split(metric, &f, t, tol, diam * 1e-13, 0)?;
    }
    Ok(total)
}

fn integrate_tri_split<F: Fn(Vec2) -> f64>(
    metric: &ConicalMetric,
    f: &F,
    t: [Vec2; 3],
    tol: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let det = (t[1] - t[0]).cross(t[2] - t[0]);
    if det == 0.0 {
        return Ok(0.0);
    }
    if depth > 8 {
        return Err(Error::Accuracy("singular point classification did not terminate".into()));
    }
    let mut t = t;
    let tdiam = t[0].dist(t[1]).max(t[1].dist(t[2])).max(t[2].dist(t[0]));
    let near = 1e-6 * tdiam;
    let mut at_vertex: Vec<(usize, usize)> = Vec::new();
    let mut inside: Option<(usize, [f64; 3])> = None;
    let mut near_edge: Option<(usize, Vec2)> = None;
    for (j, p) in metric.singular_points().iter().enumerate() {
        let q = p.position();
        if let Some(v) = (0..3).find(|&v| t[v].dist(q) <= eps) {
            // snap so the graded Duffy map is centred exactly on the singularity
            t[v] = q;
            at_vertex.push((v, j));
            continue;
        }
        if let Some(v) = (0..3).find(|&v| t[v].dist(q) <= near) {
            at_vertex.push((v, j));
            continue;
        }
        let l0 = (t[1] - q).cross(t[2] - q) / det;
        let l1 = (t[2] - q).cross(t[0] - q) / det;
        let l2 = (t[0] - q).cross(t[1] - q) / det;
        let tiny = 1e-14;
        if l0 >= -tiny && l1 >= -tiny && l2 >= -tiny {
            if inside.is_none() {
                inside = Some((j, [l0, l1, l2]));
            }
            continue;
        }
        for k in 0..3 {
            let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            let e = b - a;
            let r = ((q - a).dot(e) / e.norm2()).clamp(0.0, 1.0);
            let foot = a + r * e;
            if foot.dist(q) <= near && near_edge.is_none() {
                near_edge = Some((k, foot));
            }
        }
    }
    if inside.is_none() && at_vertex.is_empty() {
        if let Some((k, foot)) = near_edge {
            // a singular point just outside an edge: split there so it sits near a vertex
            let s1 = integrate_tri_split(metric, f, [t[k], t[(k + 1) % 3], foot], tol / 2.0, eps, depth + 1)?;
            let s2 = integrate_tri_split(metric, f, [t[k], foot, t[(k + 2) % 3]], tol / 2.0, eps, depth + 1)?;
            return Ok(s1 + s2);
        }
    }
    if let Some((j, l)) = inside {
        let q = metric.singular_points()[j].position();
        let mut s = 0.0;
        for (k, &lk) in l.iter().enumerate() {
            // skip the degenerate sub-triangle when q lies on the opposite edge
            if lk.abs() <= 1e-14 {
                continue;
            }
            let sub = [q, t[(k + 1) % 3], t[(k + 2) % 3]];
            s += integrate_tri_split(metric, f, sub, tol / 3.0, eps, depth + 1)?;
        }
        return Ok(s);
    }
    match at_vertex.len() {
        0 => integrate_triangle(f, t[0], t[1], t[2], None, tol),
        1 => {
            let (v, j) = at_vertex[0];
            let beta = metric.singular_points()[j].beta;
            integrate_triangle(f, t[v], t[(v + 1) % 3], t[(v + 2) % 3], Some(2.0 * beta), tol)
        }
        _ => {
            let (va, vb) = (at_vertex[0].0, at_vertex[1].0);
            let vc = 3 - va - vb;
            let m = 0.5 * (t[va] + t[vb]);
            let s1 = integrate_tri_split(metric, f, [t[va], m, t[vc]], tol / 2.0, eps, depth + 1)?;
            let s2 = integrate_tri_split(metric, f, [m, t[vb], t[vc]], tol / 2.0, eps, depth + 1)?;
            Ok(s1 + s2)
        }
    }
}

/// Metric area enclosed by a simple, positively oriented polygon.
pub fn metric_area(metric: &ConicalMetric, boundary: &[Vec2]) -> Result<f64> {
    let poly = open_polygon(boundary);
    if poly.len() >= 3 && crate::curve::shoelace(&poly) < 0.0 {
        return Err(Error::Geometry("region boundary is not positively oriented".into()));
    }
    let a = integrate_region(metric, &poly, |z| area_density(metric, z), 1e-9)?;
    Ok(a.max(0.0))
}

/// Signed metric area of any simple polygon (negative when clockwise).
pub fn signed_metric_area(metric: &ConicalMetric, boundary: &[Vec2]) -> Result<f64> {
    integrate_region(metric, boundary, |z| area_density(metric, z), 1e-9)
}

fn area_density(metric: &ConicalMetric, z: Vec2) -> f64 {
    metric.conformal_factor_at(z, None).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(beta: f64) -> ConicalMetric {
        ConicalMetric::flat_cone(beta).unwrap()
    }

    #[test]
    fn conformal_factor_examples() {
        let m = cone(-0.5);
        assert!((conformal_factor(&m, Vec2::new(1.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((conformal_factor(&m, Vec2::new(4.0, 0.0)).unwrap() - 0.25).abs() < 1e-15);
        let hx = ConicalMetric::new(m.singular_points().to_vec(), Polynomial2::new(vec![0.0, 1.0, 0.0]).unwrap()).unwrap();
        let v = conformal_factor(&hx, Vec2::new(1.0, 0.0)).unwrap();
        assert!((v - 7.38905609893065).abs() < 1e-12);
        match conformal_factor(&m, Vec2::ZERO) {
            Err(Error::SingularPoint { index: 0, .. }) => {}
            other => panic!("expected singular point error, got {other:?}"),
        }
    }

    #[test]
    fn gauss_curvature_examples() {
        let m = cone(-0.3);
        assert_eq!(gauss_curvature(&m, Vec2::new(0.3, 0.2)).unwrap(), 0.0);
        let lin = ConicalMetric::new(m.singular_points().to_vec(), Polynomial2::new(vec![1.0, 2.0, -3.0]).unwrap()).unwrap();
        assert_eq!(gauss_curvature(&lin, Vec2::new(0.3, 0.2)).unwrap(), 0.0);
        let quad = ConicalMetric::new(
            vec![ConePoint::new(Vec2::ZERO, -0.5)],
            Polynomial2::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap(),
        )
        .unwrap();
        let k = gauss_curvature(&quad, Vec2::new(2.0, 0.0)).unwrap();
        assert!((k + 8.0 * (-8f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn polynomial_derivatives_match_finite_differences() {
        let p = Polynomial2::new(vec![0.3, -1.0, 0.5, 0.2, -0.7, 0.1, 0.05, 0.0, -0.3, 0.11]).unwrap();
        let z = Vec2::new(0.4, -0.9);
        let (_, g, lap) = p.eval(z);
        let h = 1e-4;
        let f = |dx: f64, dy: f64| p.value(z + Vec2::new(dx, dy));
        let gx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let gy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        let l = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h);
        assert!((g.x - gx).abs() < 1e-7 && (g.y - gy).abs() < 1e-7);
        assert!((lap - l).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_metrics() {
        assert!(ConicalMetric::flat_cone(0.0).is_err());
        assert!(ConicalMetric::flat_cone(-1.0).is_err());
        let p = ConePoint::new(Vec2::new(1.0, 1.0), -0.5);
        assert!(ConicalMetric::new(vec![p, p], Polynomial2::zero()).is_err());
        assert!(Polynomial2::new(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn harmonic_detection() {
        assert!(Polynomial2::new(vec![1.0, 2.0, 3.0, 1.0, 5.0, -1.0]).unwrap().is_harmonic());
        assert!(!Polynomial2::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap().is_harmonic());
    }

    #[test]
    fn metric_area_of_cone_disk() {
        for beta in [-0.9, -0.5, -0.2] {
            let m = cone(beta);
            let r: f64 = 1.5;
            let n = 400;
            let poly: Vec<Vec2> = (0..n).map(|i| Vec2::polar(r, i as f64 * std::f64::consts::TAU / n as f64)).collect();
            let a = metric_area(&m, &poly).unwrap();
            // oracle for the same polygon: ∮ r^{2β} (x dy - y dx) / (2β+2), exact per edge by quadrature
            let mut oracle = 0.0;
            for i in 0..n {
                let (p, q) = (poly[i], poly[(i + 1) % n]);
                let e = crate::quadrature::integrate(
                    |s| {
                        let z = p + s * (q - p);
                        z.norm().powf(2.0 * beta) * z.cross(q - p)
                    },
                    0.0,
                    1.0,
                    &QuadOptions { rel_tol: 1e-13, ..Default::default() },
                )
                .unwrap();
                oracle += e / (2.0 * beta + 2.0);
            }
            assert!((a - oracle).abs() < 1e-7 * oracle, "beta {beta}: {a} vs {oracle}");
            let exact = std::f64::consts::PI * r.powf(2.0 + 2.0 * beta) / (1.0 + beta);
            assert!((a - exact).abs() < 1e-3 * exact);
        }
    }

    #[test]
    fn unit_square_far_from_cone() {
        let m = ConicalMetric::euclidean();
        let sq = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        assert!((metric_area(&m, &sq).unwrap() - 1.0).abs() < 1e-12);
        let cw: Vec<Vec2> = sq.iter().rev().copied().collect();
        assert!(matches!(metric_area(&m, &cw), Err(Error::Geometry(_))));
        let bow = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert!(matches!(metric_area(&m, &bow), Err(Error::Geometry(_))));
    }
}
