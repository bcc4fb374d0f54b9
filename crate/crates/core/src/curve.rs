//! Planar curves: analytic fixtures with exact jets, sampled curves with
//! spline jets, euclidean curvature, the ρ functional and the geodesic
//! curvature of curves through cone points.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::metric::{ConicalMetric, Offset};
use crate::quadrature::{integrate, integrate_power_end, QuadOptions};
use crate::spline::{CubicSpline, SplineBoundary};
use crate::vec2::Vec2;

/// Position and first three parameter derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveJet {
    pub pos: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
    pub d3: Vec2,
}

const REGULARITY_TOL: f64 = 1e-12;

impl CurveJet {
    pub fn from_jets(x: Jet, y: Jet) -> Self {
        CurveJet {
            pos: Vec2::new(x.0[0], y.0[0]),
            d1: Vec2::new(x.0[1], y.0[1]),
            d2: Vec2::new(x.0[2], y.0[2]),
            d3: Vec2::new(x.0[3], y.0[3]),
        }
    }

    pub fn speed(&self) -> f64 {
        self.d1.norm()
    }

    pub fn check_regular(&self) -> Result<()> {
        if !(self.speed() > REGULARITY_TOL) {
            return Err(Error::Regularity(format!("degenerate jet, |γ'| = {:e}", self.speed())));
        }
        Ok(())
    }

    pub fn tangent(&self) -> Vec2 {
        self.d1.normalized()
    }

    /// Left normal, so that (τ, ξ) is positively oriented.
    pub fn normal(&self) -> Vec2 {
        self.tangent().perp()
    }

    pub fn curvature(&self) -> f64 {
        let s = self.speed();
        self.d1.cross(self.d2) / (s * s * s)
    }

    /// dk/ds with s the euclidean arc length.
    pub fn curvature_derivative(&self) -> f64 {
        let s = self.speed();
        let c = self.d1.cross(self.d2);
        let dc = self.d1.cross(self.d3);
        let ds = self.d1.dot(self.d2) / s;
        (dc / s.powi(3) - 3.0 * c * ds / s.powi(4)) / s
    }

    /// The same geometric jet for the reversed parameter direction.
    pub fn reversed(&self) -> CurveJet {
        CurveJet { pos: self.pos, d1: -self.d1, d2: self.d2, d3: -self.d3 }
    }
}

/// A regular parametrized curve on `[a, b]`.
pub trait ParametricCurve: Send + Sync {
    fn domain(&self) -> (f64, f64);

    fn jet(&self, t: f64) -> CurveJet;

    /// Curve end point; `end` is 0 or 1.
    fn endpoint(&self, end: usize) -> Vec2 {
        let (a, b) = self.domain();
        self.jet(if end == 0 { a } else { b }).pos
    }

    /// Jet at parameter distance `tau` from one end together with
    /// `γ - γ(end)`, computed without cancellation where possible.
    fn jet_near_end(&self, end: usize, tau: f64) -> (CurveJet, Vec2) {
        let (a, b) = self.domain();
        let j = self.jet(if end == 0 { a + tau } else { b - tau });
        (j, j.pos - self.endpoint(end))
    }

    /// Parameters where the jet may be non-smooth (always includes the ends).
    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.domain();
        vec![a, b]
    }

    fn is_closed(&self) -> bool {
        false
    }
}

impl<C: ParametricCurve + ?Sized> ParametricCurve for Arc<C> {
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn jet(&self, t: f64) -> CurveJet {
        (**self).jet(t)
    }
    fn endpoint(&self, end: usize) -> Vec2 {
        (**self).endpoint(end)
    }
    fn jet_near_end(&self, end: usize, tau: f64) -> (CurveJet, Vec2) {
        (**self).jet_near_end(end, tau)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn is_closed(&self) -> bool {
        (**self).is_closed()
    }
}

/// The tear drop `γ(s) = (-sin s, sin s cos s) / (1 + cos² s)`, one lobe
/// `s ∈ [0, π]` scaled by `scale`, traversed counterclockwise from the origin.
#[derive(Clone, Copy, Debug)]
pub struct TearDrop {
    pub scale: f64,
}

impl TearDrop {
    fn lobe(&self, s: f64) -> CurveJet {
        let t = Jet::var(s);
        let (sn, cs) = (t.sin(), t.cos());
        let den = (cs * cs + 1.0).recip();
        CurveJet::from_jets((-sn * den).scale(self.scale), (sn * cs * den).scale(self.scale))
    }

    fn mirrored(j: CurveJet) -> CurveJet {
        // γ(π - τ) is the reflection of γ(τ) across the x-axis
        let m = |v: Vec2| Vec2::new(v.x, -v.y);
        CurveJet { pos: m(j.pos), d1: -m(j.d1), d2: m(j.d2), d3: -m(j.d3) }
    }
}

impl Default for TearDrop {
    fn default() -> Self {
        TearDrop { scale: 1.0 }
    }
}

impl ParametricCurve for TearDrop {
    fn domain(&self) -> (f64, f64) {
        (0.0, PI)
    }
    fn jet(&self, t: f64) -> CurveJet {
        if t <= 0.5 * PI {
            self.lobe(t)
        } else {
            Self::mirrored(self.lobe(PI - t))
        }
    }
    fn endpoint(&self, _end: usize) -> Vec2 {
        Vec2::ZERO
    }
    fn jet_near_end(&self, end: usize, tau: f64) -> (CurveJet, Vec2) {
        let j = if end == 0 { self.lobe(tau) } else { Self::mirrored(self.lobe(tau)) };
        (j, j.pos)
    }
}

/// Unit-speed straight segment from `a` to `b`.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl ParametricCurve for Segment {
    fn domain(&self) -> (f64, f64) {
        (0.0, self.b.dist(self.a))
    }
    fn jet(&self, t: f64) -> CurveJet {
        let len = self.b.dist(self.a);
        let dir = (self.b - self.a) / len;
        let pos = if t == len { self.b } else { self.a + t * dir };
        CurveJet { pos, d1: dir, d2: Vec2::ZERO, d3: Vec2::ZERO }
    }
    fn endpoint(&self, end: usize) -> Vec2 {
        if end == 0 {
            self.a
        } else {
            self.b
        }
    }
    fn jet_near_end(&self, end: usize, tau: f64) -> (CurveJet, Vec2) {
        let len = self.b.dist(self.a);
        let dir = (self.b - self.a) / len;
        let off = if end == 0 { tau * dir } else { -tau * dir };
        let pos = self.endpoint(end) + off;
        (CurveJet { pos, d1: dir, d2: Vec2::ZERO, d3: Vec2::ZERO }, off)
    }
}

type JetFn = dyn Fn(Jet) -> (Jet, Jet) + Send + Sync;

/// Curve given by a closure over derivative jets.
#[derive(Clone)]
pub struct AnalyticCurve {
    f: Arc<JetFn>,
    domain: (f64, f64),
    closed: bool,
}

impl std::fmt::Debug for AnalyticCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticCurve").field("domain", &self.domain).field("closed", &self.closed).finish()
    }
}

impl AnalyticCurve {
    pub fn new(f: impl Fn(Jet) -> (Jet, Jet) + Send + Sync + 'static, domain: (f64, f64), closed: bool) -> Self {
        AnalyticCurve { f: Arc::new(f), domain, closed }
    }

    /// Counterclockwise circle, parametrized by angle over `[0, 2π]`.
    pub fn circle(center: Vec2, radius: f64) -> Self {
        Self::new(
            move |t| (t.cos().scale(radius) + center.x, t.sin().scale(radius) + center.y),
            (0.0, TAU),
            true,
        )
    }

    /// Circular arc over angles `[t0, t1]`.
    pub fn arc(center: Vec2, radius: f64, t0: f64, t1: f64) -> Self {
        Self::new(
            move |t| (t.cos().scale(radius) + center.x, t.sin().scale(radius) + center.y),
            (t0, t1),
            false,
        )
    }

    /// Ellipse with semi-axes `a`, `b`, counterclockwise.
    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Self {
        Self::new(move |t| (t.cos().scale(a) + center.x, t.sin().scale(b) + center.y), (0.0, TAU), true)
    }

    /// Polar graph `r(φ)` about `center` over `[phi0, phi1]`.
    pub fn polar(
        r: impl Fn(Jet) -> Jet + Send + Sync + 'static,
        center: Vec2,
        phi0: f64,
        phi1: f64,
    ) -> Self {
        Self::new(
            move |phi| {
                let rr = r(phi);
                (rr * phi.cos() + center.x, rr * phi.sin() + center.y)
            },
            (phi0, phi1),
            false,
        )
    }
}

impl ParametricCurve for AnalyticCurve {
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn jet(&self, t: f64) -> CurveJet {
        let (x, y) = (self.f)(Jet::var(t));
        CurveJet::from_jets(x, y)
    }
    fn is_closed(&self) -> bool {
        self.closed
    }
}

/// Ordered planar samples with a strictly increasing parametrization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    nodes: Vec<Vec2>,
    params: Vec<f64>,
    closed: bool,
    /// Index of the singular point each end is pinned to, if any.
    anchors: [Option<usize>; 2],
}

impl SampledCurve {
    pub fn new(nodes: Vec<Vec2>, params: Vec<f64>, closed: bool, anchors: [Option<usize>; 2]) -> Result<Self> {
        if nodes.len() != params.len() {
            return Err(Error::Input("nodes and params differ in length".into()));
        }
        if nodes.len() < 2 {
            return Err(Error::Input("a sampled curve needs at least two nodes".into()));
        }
        if nodes.iter().any(|p| !p.is_finite()) || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Input("non-finite curve data".into()));
        }
        if params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("params must be strictly increasing".into()));
        }
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Regularity("consecutive nodes coincide".into()));
        }
        if closed {
            if nodes[0] != nodes[nodes.len() - 1] {
                return Err(Error::Input("closed curve must repeat its first node at the end".into()));
            }
            if nodes.len() < 5 {
                return Err(Error::Input("closed curve needs at least 4 distinct nodes".into()));
            }
        }
        Ok(SampledCurve { nodes, params, closed, anchors })
    }

    /// Chord-length parametrization of the given points.
    pub fn from_points(nodes: Vec<Vec2>, closed: bool, anchors: [Option<usize>; 2]) -> Result<Self> {
        let mut params = Vec::with_capacity(nodes.len());
        let mut s = 0.0;
        params.push(0.0);
        for w in nodes.windows(2) {
            s += w[1].dist(w[0]);
            params.push(s);
        }
        Self::new(nodes, params, closed, anchors)
    }

    /// Samples a parametric curve at uniform parameter values.
    pub fn sample<C: ParametricCurve + ?Sized>(curve: &C, n: usize, anchors: [Option<usize>; 2]) -> Result<Self> {
        let (a, b) = curve.domain();
        let params: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let mut nodes: Vec<Vec2> = params.iter().map(|&t| curve.jet(t).pos).collect();
        nodes[0] = curve.endpoint(0);
        nodes[n - 1] = if curve.is_closed() { nodes[0] } else { curve.endpoint(1) };
        Self::new(nodes, params, curve.is_closed(), anchors)
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn anchors(&self) -> [Option<usize>; 2] {
        self.anchors
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Checks that anchored ends sit exactly on their singular points.
    pub fn check_anchors(&self, metric: &ConicalMetric) -> Result<()> {
        for (end, a) in self.anchors.iter().enumerate() {
            if let Some(j) = *a {
                let p = metric
                    .singular_points()
                    .get(j)
                    .ok_or_else(|| Error::Input(format!("anchor references missing singular point {j}")))?;
                let node = if end == 0 { self.nodes[0] } else { self.nodes[self.nodes.len() - 1] };
                if node != p.position() {
                    return Err(Error::Input(format!("end {end} is not at singular point {j}")));
                }
            }
        }
        Ok(())
    }

    /// Spline interpolant: periodic when closed, not-a-knot otherwise.
    pub fn spline(&self) -> Result<SplineCurve> {
        SplineCurve::new(self)
    }

    pub fn reversed(&self) -> SampledCurve {
        let nodes: Vec<Vec2> = self.nodes.iter().rev().copied().collect();
        let t1 = self.params[self.params.len() - 1];
        let params: Vec<f64> = self.params.iter().rev().map(|&p| t1 - p).collect();
        SampledCurve { nodes, params, closed: self.closed, anchors: [self.anchors[1], self.anchors[0]] }
    }
}

/// Cubic spline interpolant of a sampled curve.
#[derive(Clone, Debug)]
pub struct SplineCurve {
    sx: CubicSpline,
    sy: CubicSpline,
    ends: [Vec2; 2],
    closed: bool,
}

impl SplineCurve {
    pub fn new(c: &SampledCurve) -> Result<Self> {
        let bc = if c.closed { SplineBoundary::Periodic } else { SplineBoundary::NotAKnot };
        Self::with_boundary(c, bc)
    }

    pub fn with_boundary(c: &SampledCurve, bc: SplineBoundary) -> Result<Self> {
        let xs: Vec<f64> = c.nodes.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = c.nodes.iter().map(|p| p.y).collect();
        let (bx, by) = match bc {
            SplineBoundary::Clamped(_, _) => {
                return Err(Error::Input("clamped curve splines need vector end tangents".into()));
            }
            other => (other, other),
        };
        Ok(SplineCurve {
            sx: CubicSpline::new(&c.params, &xs, bx)?,
            sy: CubicSpline::new(&c.params, &ys, by)?,
            ends: [c.nodes[0], c.nodes[c.nodes.len() - 1]],
            closed: c.closed,
        })
    }
}

impl ParametricCurve for SplineCurve {
    fn domain(&self) -> (f64, f64) {
        self.sx.domain()
    }
    fn jet(&self, t: f64) -> CurveJet {
        let x = self.sx.eval(t);
        let y = self.sy.eval(t);
        CurveJet {
            pos: Vec2::new(x[0], y[0]),
            d1: Vec2::new(x[1], y[1]),
            d2: Vec2::new(x[2], y[2]),
            d3: Vec2::new(x[3], y[3]),
        }
    }
    fn endpoint(&self, end: usize) -> Vec2 {
        self.ends[end]
    }
    fn jet_near_end(&self, end: usize, tau: f64) -> (CurveJet, Vec2) {
        let x = self.sx.offset_from_end(end, tau);
        let y = self.sy.offset_from_end(end, tau);
        let off = Vec2::new(x[0], y[0]);
        (
            CurveJet {
                pos: self.ends[end] + off,
                d1: Vec2::new(x[1], y[1]),
                d2: Vec2::new(x[2], y[2]),
                d3: Vec2::new(x[3], y[3]),
            },
            off,
        )
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.sx.knots().to_vec()
    }
    fn is_closed(&self) -> bool {
        self.closed
    }
}

fn is_end<C: ParametricCurve + ?Sized>(curve: &C, t: f64) -> Option<usize> {
    let (a, b) = curve.domain();
    if curve.is_closed() {
        return None;
    }
    if t == a {
        Some(0)
    } else if t == b {
        Some(1)
    } else {
        None
    }
}

fn coincides(z: Vec2, p: Vec2) -> bool {
    (z - p).norm() <= 1e-12 * (1.0 + p.norm())
}

/// Signed euclidean curvature at parameter `t`.
pub fn curvature<C: ParametricCurve + ?Sized>(curve: &C, t: f64) -> Result<f64> {
    let j = curve.jet(t);
    j.check_regular()?;
    Ok(j.curvature())
}

/// `ρ = ⟨γ - p, ξ⟩ / |γ - p|²`, extended by `-k/2` at an end lying on `p`.
pub fn rho<C: ParametricCurve + ?Sized>(curve: &C, t: f64, p: Vec2) -> Result<f64> {
    let j = curve.jet(t);
    j.check_regular()?;
    if coincides(j.pos, p) {
        return match is_end(curve, t) {
            Some(_) => Ok(-0.5 * j.curvature()),
            None => Err(Error::Domain(format!("ρ evaluated where the curve passes through ({}, {})", p.x, p.y))),
        };
    }
    let d = j.pos - p;
    Ok(d.dot(j.normal()) / d.norm2())
}

/// The bracket `k - Σ β_j ρ_j - ⟨Dh, ξ⟩` at a point with frame `(pos, ξ, k)`.
pub fn geodesic_bracket(metric: &ConicalMetric, pos: Vec2, normal: Vec2, k: f64, offset: Offset) -> Result<f64> {
    let mut s = k;
    for (j, p) in metric.singular_points().iter().enumerate() {
        let d = metric.delta(j, pos, offset);
        let r2 = d.norm2();
        if r2 == 0.0 {
            return Err(Error::SingularPoint { index: j, position: p.position() });
        }
        s -= p.beta * d.dot(normal) / r2;
    }
    let (_, dh, _) = metric.h().eval(pos);
    Ok(s - dh.dot(normal))
}

/// Geodesic curvature `λ^{-1/2}(k - Σ β_j ρ_j - ⟨Dh, ξ⟩)`; exactly 0 at an
/// end sitting on a singular point.
pub fn geodesic_curvature<C: ParametricCurve + ?Sized>(metric: &ConicalMetric, curve: &C, t: f64) -> Result<f64> {
    let j = curve.jet(t);
    j.check_regular()?;
    if let Some(idx) = metric.singular_at(j.pos) {
        return match is_end(curve, t) {
            Some(_) => Ok(0.0),
            None => Err(Error::SingularPoint { index: idx, position: metric.singular_points()[idx].position() }),
        };
    }
    let lam = metric.conformal_factor_at(j.pos, None)?;
    Ok(geodesic_bracket(metric, j.pos, j.normal(), j.curvature(), None)? / lam.sqrt())
}

/// Geodesic curvature at parameter distance `tau > 0` from an end that sits
/// on singular point `idx`, using the cancellation-free end offset.
pub fn geodesic_curvature_near_end<C: ParametricCurve + ?Sized>(
    metric: &ConicalMetric,
    curve: &C,
    end: usize,
    tau: f64,
    idx: usize,
) -> Result<f64> {
    let (j, off) = curve.jet_near_end(end, tau);
    j.check_regular()?;
    let offset = Some((idx, off));
    let lam = metric.conformal_factor_at(j.pos, offset)?;
    Ok(geodesic_bracket(metric, j.pos, j.normal(), j.curvature(), offset)? / lam.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcLengthMode {
    Euclidean,
    Metric,
}

/// Resamples a curve at nodes equally spaced in euclidean or metric arc
/// length. The returned params are the cumulative arc lengths.
pub fn arclength_reparam(
    curve: &SampledCurve,
    mode: ArcLengthMode,
    metric: Option<&ConicalMetric>,
    count: Option<usize>,
) -> Result<SampledCurve> {
    let n = count.unwrap_or(curve.len());
    if n < 2 {
        return Err(Error::Input("need at least two output nodes".into()));
    }
    let sp = curve.spline()?;
    let euclid = ConicalMetric::euclidean();
    let metric = match mode {
        ArcLengthMode::Euclidean => &euclid,
        ArcLengthMode::Metric => metric.ok_or_else(|| Error::Input("metric mode needs a metric".into()))?,
    };
    for &t in curve.params() {
        sp.jet(t).check_regular()?;
    }
    let knots = curve.params().to_vec();
    let last = knots.len() - 2;
    let opts = QuadOptions { rel_tol: 1e-12, abs_tol: 1e-15, ..QuadOptions::default() };
    let sing = |end: usize| -> Option<(usize, f64)> {
        if curve.is_closed() {
            return None;
        }
        metric.singular_at(sp.endpoint(end)).map(|j| (j, metric.singular_points()[j].beta))
    };
    let ends = [sing(0), sing(1)];
    let speed = |t: f64| -> f64 {
        let j = sp.jet(t);
        metric.conformal_factor_at(j.pos, None).map(|l| l.sqrt() * j.speed()).unwrap_or(0.0)
    };
    let speed_end = |end: usize, tau: f64| -> f64 {
        let (j, off) = sp.jet_near_end(end, tau);
        let idx = ends[end].map(|e| e.0);
        if off.norm2() == 0.0 {
            return 0.0;
        }
        metric.conformal_factor_at(j.pos, idx.map(|i| (i, off))).map(|l| l.sqrt() * j.speed()).unwrap_or(0.0)
    };
    let from_left = |t0: f64, t: f64| -> Result<f64> {
        match ends[0] {
            Some((_, e)) if t0 == knots[0] => integrate_power_end(|tau| speed_end(0, tau), t - knots[0], e, &opts),
            _ => integrate(speed, t0, t, &opts),
        }
    };
    let to_right = |t: f64| -> Result<f64> {
        let e = ends[1].expect("singular right end").1;
        integrate_power_end(|tau| speed_end(1, tau), knots[last + 1] - t, e, &opts)
    };
    // length of segment k, and length from its start to t
    let seg_len = |k: usize| -> Result<f64> {
        let (t0, t1) = (knots[k], knots[k + 1]);
        if k == last && ends[1].is_some() {
            let m = 0.5 * (t0 + t1);
            Ok(from_left(t0, m)? + to_right(m)?)
        } else {
            from_left(t0, t1)
        }
    };
    let partial = |k: usize, seg: f64, t: f64| -> Result<f64> {
        let (t0, t1) = (knots[k], knots[k + 1]);
        if k == last && ends[1].is_some() && t > 0.5 * (t0 + t1) {
            Ok(seg - to_right(t)?)
        } else {
            from_left(t0, t)
        }
    };
    let mut seg = vec![0.0; knots.len() - 1];
    let mut cum = vec![0.0; knots.len()];
    for k in 0..knots.len() - 1 {
        seg[k] = seg_len(k)?;
        cum[k + 1] = cum[k] + seg[k];
    }
    let total = cum[knots.len() - 1];
    let mut nodes = Vec::with_capacity(n);
    let mut params = Vec::with_capacity(n);
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        params.push(target);
        if i == 0 {
            nodes.push(curve.nodes()[0]);
            continue;
        }
        if i == n - 1 {
            nodes.push(curve.nodes()[curve.len() - 1]);
            params[i] = total;
            continue;
        }
        let k = cum.partition_point(|&c| c <= target).clamp(1, knots.len() - 1) - 1;
        let (t0, t1) = (knots[k], knots[k + 1]);
        let rest = target - cum[k];
        let (mut lo, mut hi) = (t0, t1);
        let mut t = t0 + (t1 - t0) * rest / (cum[k + 1] - cum[k]);
        for _ in 0..100 {
            let f = partial(k, seg[k], t)? - rest;
            if f.abs() <= 1e-13 * total {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let v = speed(t);
            let newton = t - f / v;
            t = if v > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        nodes.push(sp.jet(t).pos);
    }
    SampledCurve::new(nodes, params, curve.is_closed(), curve.anchors())
}

/// Samples of the tear-drop lobe on `s ∈ [0, π]`, pinned at the origin
/// (singular point 0) at both ends.
pub fn tear_drop_fixture(resolution: usize) -> Result<SampledCurve> {
    if resolution < 16 {
        return Err(Error::Input("tear drop needs at least 16 samples".into()));
    }
    SampledCurve::sample(&TearDrop::default(), resolution, [Some(0), Some(0)])
}

/// Proper or touching intersection of segments `ab` and `cd`.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on(a, b, c)) || (d2 == 0.0 && on(a, b, d)) || (d3 == 0.0 && on(c, d, a)) || (d4 == 0.0 && on(c, d, b))
}

/// Intersection point of segments `ab` and `cd` when they cross properly.
pub fn segment_crossing(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<Vec2> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den == 0.0 {
        return None;
    }
    let t = (c - a).cross(s) / den;
    let u = (c - a).cross(r) / den;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(a + t * r)
    } else {
        None
    }
}

/// Pairs of non-adjacent polyline segments that intersect.
pub fn self_intersections(nodes: &[Vec2], closed: bool) -> Vec<(usize, usize)> {
    let m = nodes.len() - 1;
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 2..m {
            if closed && i == 0 && j == m - 1 {
                continue;
            }
            if segments_intersect(nodes[i], nodes[i + 1], nodes[j], nodes[j + 1]) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Signed area of a polygon (closing edge implied).
pub fn shoelace(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>()
}

/// Winding number of a polygon (closing edge implied) around `q`.
pub fn winding_number(poly: &[Vec2], q: Vec2) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let side = (b - a).cross(q - a);
        if a.y <= q.y {
            if b.y > q.y && side > 0.0 {
                w += 1;
            }
        } else if b.y <= q.y && side < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Euclidean length of a parametric curve.
pub fn euclidean_length<C: ParametricCurve + ?Sized>(curve: &C) -> Result<f64> {
    let bps = curve.breakpoints();
    let opts = QuadOptions { rel_tol: 1e-12, abs_tol: 1e-15, ..QuadOptions::default() };
    let mut s = 0.0;
    for w in bps.windows(2) {
        s += integrate(|t| curve.jet(t).speed(), w[0], w[1], &opts)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tear_drop_identities_with_exact_jets() {
        let c = TearDrop::default();
        let mut worst_k: f64 = 0.0;
        let mut worst_r: f64 = 0.0;
        for i in 1..400 {
            let s = PI * i as f64 / 400.0;
            let k = curvature(&c, s).unwrap();
            let r = rho(&c, s, Vec2::ZERO).unwrap();
            let g = c.jet(s).pos;
            worst_k = worst_k.max((k - 3.0 * g.norm()).abs());
            worst_r = worst_r.max((k + 3.0 * r).abs());
        }
        assert!(worst_k < 1e-12 && worst_r < 1e-12, "{worst_k} {worst_r}");
        assert_eq!(c.jet(0.0).pos, Vec2::ZERO);
        assert_eq!(c.jet(PI).pos, Vec2::ZERO);
        assert!((c.jet(0.5 * PI).pos - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tear_drop_mirror_symmetry() {
        let c = TearDrop::default();
        for s in [0.1, 0.7, 1.3] {
            let a = c.jet(s).pos;
            let b = c.jet(PI - s).pos;
            assert!((a.x - b.x).abs() < 1e-15 && (a.y + b.y).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_examples() {
        let line = Segment { a: Vec2::new(-1.0, -1.0), b: Vec2::new(2.0, 2.0) };
        assert!(rho(&line, 0.3, Vec2::new(3.0, 3.0)).unwrap().abs() < 1e-15);
        let p = Vec2::new(0.5, -0.2);
        let circ = AnalyticCurve::circle(p, 2.0);
        for t in [0.0, 1.0, 4.0] {
            assert!((rho(&circ, t, p).unwrap() + 0.5).abs() < 1e-14);
        }
        assert!(matches!(rho(&line, line.domain().1 / 3.0, Vec2::ZERO), Err(Error::Domain(_))));
        let td = TearDrop::default();
        let k0 = curvature(&td, 0.0).unwrap();
        assert!((rho(&td, 0.0, Vec2::ZERO).unwrap() + 0.5 * k0).abs() < 1e-15);
    }

    #[test]
    fn geodesic_curvature_of_circle_about_cone() {
        for beta in [-0.9, -0.5, -0.2] {
            let m = ConicalMetric::flat_cone(beta).unwrap();
            let r: f64 = 1.7;
            let c = AnalyticCurve::circle(Vec2::ZERO, r);
            let kg = geodesic_curvature(&m, &c, 0.4).unwrap();
            assert!((kg - (1.0 + beta) * r.powf(-1.0 - beta)).abs() < 1e-13);
        }
    }

    #[test]
    fn geodesic_curvature_of_tear_drop() {
        for beta in [-0.9, -0.5, -0.2] {
            let m = ConicalMetric::flat_cone(beta).unwrap();
            let c = TearDrop::default();
            for s in [0.05, 0.9, 2.0, 3.1] {
                let kg = geodesic_curvature(&m, &c, s).unwrap();
                let g = c.jet(s).pos.norm();
                assert!((kg - g.powf(1.0 - beta) * (beta + 3.0)).abs() < 1e-12);
            }
            assert_eq!(geodesic_curvature(&m, &c, 0.0).unwrap(), 0.0);
            assert_eq!(geodesic_curvature(&m, &c, PI).unwrap(), 0.0);
        }
    }

    #[test]
    fn interior_singular_hit_is_an_error() {
        let m = ConicalMetric::flat_cone(-0.5).unwrap();
        let seg = Segment { a: Vec2::new(-1.0, 0.0), b: Vec2::new(1.0, 0.0) };
        assert!(matches!(geodesic_curvature(&m, &seg, 1.0), Err(Error::SingularPoint { index: 0, .. })));
    }

    #[test]
    fn spline_recovers_tear_drop_endpoint_rho() {
        let c = tear_drop_fixture(200).unwrap();
        let sp = c.spline().unwrap();
        let k0 = curvature(&sp, 0.0).unwrap();
        let tiny = 1e-6;
        let (j, off) = sp.jet_near_end(0, tiny);
        let r = off.dot(j.normal()) / off.norm2();
        assert!((r + 0.5 * k0).abs() < 1e-3, "{r} {k0}");
    }

    #[test]
    fn reparam_of_nonuniform_segment() {
        let nodes: Vec<Vec2> = [0.0, 0.1, 0.15, 0.6, 0.61, 1.0].iter().map(|&x| Vec2::new(x, 2.0 * x)).collect();
        let c = SampledCurve::from_points(nodes, false, [None, None]).unwrap();
        let r = arclength_reparam(&c, ArcLengthMode::Euclidean, None, Some(11)).unwrap();
        let gaps: Vec<f64> = r.nodes().windows(2).map(|w| w[1].dist(w[0])).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(gaps.iter().all(|g| (g - mean).abs() < 1e-3 * mean));
        assert_eq!(r.nodes()[0], Vec2::ZERO);
        assert_eq!(r.nodes()[10], Vec2::new(1.0, 2.0));
    }

    #[test]
    fn metric_reparam_of_radial_segment() {
        let beta = -0.5;
        let m = ConicalMetric::flat_cone(beta).unwrap();
        let big_r: f64 = 2.0;
        let nodes: Vec<Vec2> = (0..30).map(|i| Vec2::new(big_r * (i as f64 / 29.0).powi(2), 0.0)).collect();
        let c = SampledCurve::from_points(nodes, false, [Some(0), None]).unwrap();
        let r = arclength_reparam(&c, ArcLengthMode::Metric, Some(&m), Some(20)).unwrap();
        let total = r.params()[19];
        let exact = big_r.powf(1.0 + beta) / (1.0 + beta);
        assert!((total - exact).abs() < 1e-8 * exact);
        // node radii follow the inverse antiderivative
        for (i, p) in r.nodes().iter().enumerate() {
            let target = exact * i as f64 / 19.0;
            let rr = (target * (1.0 + beta)).powf(1.0 / (1.0 + beta));
            assert!((p.x - rr).abs() < 1e-6);
        }
    }

    #[test]
    fn self_intersection_sweep() {
        let bow = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert_eq!(self_intersections(&bow, false).len(), 1);
        let sq = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0), Vec2::new(0.0, 0.0)];
        assert!(self_intersections(&sq, true).is_empty());
    }
}
