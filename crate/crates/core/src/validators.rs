//! Numerical checks of the closed-form laws: singular Gauss-Bonnet, area
//! rates, the maximal-time bound, distance and convexity bounds, evolution
//! equations and curvature decay near pinned ends.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{
    geodesic_bracket, shoelace, winding_number, ParametricCurve, SampledCurve, SplineCurve,
};
use crate::error::{Error, Result};
use crate::flow::{RunRecord, Snapshot};
use crate::metric::{gauss_curvature, integrate_region, ConicalMetric};
use crate::quadrature::{integrate, QuadOptions};
use crate::spline::{CubicSpline, SplineBoundary};
use crate::vec2::{signed_angle, Vec2};

/// A region bounded by a closed chain of smooth pieces. Each junction
/// between consecutive pieces is a vertex.
#[derive(Clone)]
pub struct RegionSpec {
    pieces: Vec<Arc<dyn ParametricCurve>>,
    euler_characteristic: i32,
}

impl std::fmt::Debug for RegionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegionSpec")
            .field("pieces", &self.pieces.len())
            .field("euler_characteristic", &self.euler_characteristic)
            .finish()
    }
}

const DENSE: usize = 400;

impl RegionSpec {
    pub fn new(pieces: Vec<Arc<dyn ParametricCurve>>, euler_characteristic: i32) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Input("region needs at least one boundary piece".into()));
        }
        if pieces.len() > 1 && pieces.iter().any(|p| p.is_closed()) {
            return Err(Error::Input("closed pieces cannot be chained".into()));
        }
        let n = pieces.len();
        if !(n == 1 && pieces[0].is_closed()) {
            for i in 0..n {
                let a = pieces[i].endpoint(1);
                let b = pieces[(i + 1) % n].endpoint(0);
                if a.dist(b) > 1e-9 * (1.0 + a.norm()) {
                    return Err(Error::Geometry(format!("boundary pieces {i} and {} do not join", (i + 1) % n)));
                }
            }
        }
        let r = RegionSpec { pieces, euler_characteristic };
        if shoelace(&r.polygon(DENSE)) <= 0.0 {
            return Err(Error::Geometry("region boundary must be positively oriented".into()));
        }
        Ok(r)
    }

    /// Splits a sampled boundary at the given node parameters. A closed curve
    /// without vertices becomes one periodic spline.
    pub fn from_sampled(curve: &SampledCurve, vertex_params: &[f64], euler_characteristic: i32) -> Result<Self> {
        let params = curve.params();
        let nodes = curve.nodes();
        if vertex_params.is_empty() {
            if !curve.is_closed() {
                return Err(Error::Input("an open boundary needs vertices".into()));
            }
            return Self::new(vec![Arc::new(SplineCurve::new(curve)?)], euler_characteristic);
        }
        let mut idx: Vec<usize> = Vec::new();
        for &v in vertex_params {
            match params.iter().position(|&p| p == v) {
                Some(i) => idx.push(i),
                None => return Err(Error::Input(format!("vertex parameter {v} is not a node parameter"))),
            }
        }
        idx.sort_unstable();
        let last = params.len() - 1;
        let mut pieces: Vec<Arc<dyn ParametricCurve>> = Vec::new();
        let mut bounds: Vec<(usize, usize)> = idx.windows(2).map(|w| (w[0], w[1])).collect();
        // wrap-around piece from the last vertex through the end to the first
        let (first, lastv) = (idx[0], *idx.last().unwrap());
        if first == 0 && lastv == last {
            // vertices at both ends of the parameter range: nothing to wrap
        } else if first == 0 {
            bounds.push((lastv, last));
        } else {
            bounds.push((lastv, last + first));
        }
        for (a, b) in bounds {
            let mut pts = Vec::new();
            let mut ps = Vec::new();
            for k in a..=b {
                let (i, shift) = if k > last { (k - last, params[last] - params[0]) } else { (k, 0.0) };
                pts.push(nodes[i]);
                ps.push(params[i] + shift);
            }
            if pts.len() < 2 {
                continue;
            }
            let sc = SampledCurve::new(pts, ps, false, [None, None])?;
            pieces.push(Arc::new(SplineCurve::new(&sc)?));
        }
        Self::new(pieces, euler_characteristic)
    }

    pub fn pieces(&self) -> &[Arc<dyn ParametricCurve>] {
        &self.pieces
    }

    pub fn euler_characteristic(&self) -> i32 {
        self.euler_characteristic
    }

    fn has_vertices(&self) -> bool {
        !(self.pieces.len() == 1 && self.pieces[0].is_closed())
    }

    /// Vertex positions, vertex `i` being the start of piece `i`.
    pub fn vertices(&self) -> Vec<Vec2> {
        if !self.has_vertices() {
            return Vec::new();
        }
        self.pieces.iter().map(|p| p.endpoint(0)).collect()
    }

    /// Dense polygon along the boundary.
    pub fn polygon(&self, per_piece: usize) -> Vec<Vec2> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let (a, b) = p.domain();
            for i in 0..per_piece {
                out.push(p.jet(a + (b - a) * i as f64 / per_piece as f64).pos);
            }
        }
        out
    }
}

/// Exterior angles at the vertices, measured between one-sided chart tangents.
pub fn exterior_angles(region: &RegionSpec) -> Result<Vec<f64>> {
    let n = region.pieces.len();
    if !region.has_vertices() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = &region.pieces[(i + n - 1) % n];
        let next = &region.pieces[i];
        let t_in = prev.jet_near_end(1, 0.0).0;
        let t_out = next.jet_near_end(0, 0.0).0;
        t_in.check_regular()?;
        t_out.check_regular()?;
        out.push(signed_angle(t_in.d1, t_out.d1));
    }
    Ok(out)
}

/// The individual terms of the singular Gauss-Bonnet formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetReport {
    /// `(1/2π) ∫ K_g dA_g`.
    pub curvature_term: f64,
    /// `(1/2π) ∮ k_g ds_g`.
    pub boundary_term: f64,
    pub euler_characteristic: i32,
    pub exterior_angles: Vec<f64>,
    /// Cone orders at boundary vertices, aligned with the angles (0 for smooth vertices).
    pub vertex_orders: Vec<f64>,
    pub interior_orders: Vec<f64>,
    pub residual: f64,
}

fn piece_bracket_integral(metric: &ConicalMetric, piece: &dyn ParametricCurve, cut: [f64; 2]) -> Result<f64> {
    let (a, b) = piece.domain();
    let (lo, hi) = (a + cut[0], b - cut[1]);
    let opts = QuadOptions { rel_tol: 1e-11, abs_tol: 1e-13, ..QuadOptions::default() };
    let mut bps: Vec<f64> = piece.breakpoints().into_iter().filter(|&t| t > lo && t < hi).collect();
    bps.insert(0, lo);
    bps.push(hi);
    let f = |t: f64| -> f64 {
        let j = piece.jet(t);
        match geodesic_bracket(metric, j.pos, j.normal(), j.curvature(), None) {
            Ok(v) => v * j.speed(),
            Err(_) => f64::NAN,
        }
    };
    let mut s = 0.0;
    for w in bps.windows(2) {
        s += integrate(f, w[0], w[1], &opts)?;
    }
    if !s.is_finite() {
        return Err(Error::Accuracy("boundary integrand not finite".into()));
    }
    Ok(s)
}

/// Parameter distance from `end` at which the piece leaves the ball of radius `eps` around its end point.
fn exit_param(piece: &dyn ParametricCurve, end: usize, eps: f64) -> f64 {
    let (a, b) = piece.domain();
    let (mut lo, mut hi) = (0.0, b - a);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if piece.jet_near_end(end, mid).1.norm() < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∮ k_g ds_g`, excising balls of radius ε, ε/2, ε/4 around cone vertices
/// and extrapolating to ε = 0.
pub fn boundary_geodesic_integral(metric: &ConicalMetric, region: &RegionSpec) -> Result<f64> {
    let verts = region.vertices();
    let n = region.pieces.len();
    let mut total = 0.0;
    for (i, piece) in region.pieces.iter().enumerate() {
        let singular = if verts.is_empty() {
            [false, false]
        } else {
            [metric.singular_at(verts[i]).is_some(), metric.singular_at(verts[(i + 1) % n]).is_some()]
        };
        if !singular[0] && !singular[1] {
            total += piece_bracket_integral(metric, piece.as_ref(), [0.0, 0.0])?;
            continue;
        }
        let poly: Vec<Vec2> = {
            let (a, b) = piece.domain();
            (0..=64).map(|k| piece.jet(a + (b - a) * k as f64 / 64.0).pos).collect()
        };
        let size = poly.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>();
        let eps = 1e-2 * size;
        let at = |e: f64| -> Result<f64> {
            let cut = [0, 1].map(|end| if singular[end] { exit_param(piece.as_ref(), end, e) } else { 0.0 });
            piece_bracket_integral(metric, piece.as_ref(), cut)
        };
        let (i1, i2, i4) = (at(eps)?, at(0.5 * eps)?, at(0.25 * eps)?);
        total += (8.0 * i4 - 6.0 * i2 + i1) / 3.0;
    }
    Ok(total)
}

/// `|(1/2π)∫K dA + (1/2π)∮k_g ds - χ - (1/2π)Σ(π-α_j)β_j - Σ_int β_j + (1/2π)Σα_j|`
/// with all terms.
pub fn gauss_bonnet_report(metric: &ConicalMetric, region: &RegionSpec) -> Result<GaussBonnetReport> {
    let angles = exterior_angles(region)?;
    let verts = region.vertices();
    let poly = region.polygon(DENSE);
    let mut vertex_orders = vec![0.0; verts.len()];
    let mut interior_orders = Vec::new();
    for p in metric.singular_points() {
        let q = p.position();
        if let Some(i) = verts.iter().position(|v| metric.singular_at(*v).is_some() && v.dist(q) <= 1e-12 * (1.0 + q.norm())) {
            vertex_orders[i] = p.beta;
            continue;
        }
        let on_edge = poly.iter().any(|v| v.dist(q) <= 1e-12 * (1.0 + q.norm()));
        if on_edge {
            return Err(Error::Input("singular points on the boundary must be vertices".into()));
        }
        if winding_number(&poly, q) != 0 {
            interior_orders.push(p.beta);
        }
    }
    let curvature_term = if metric.h().is_harmonic() {
        0.0
    } else {
        let h = metric.h().clone();
        integrate_region(metric, &poly, move |z| -h.eval(z).2, 1e-9)? / (2.0 * PI)
    };
    let boundary_term = boundary_geodesic_integral(metric, region)? / (2.0 * PI);
    let chi = region.euler_characteristic as f64;
    let vsum: f64 = angles.iter().zip(&vertex_orders).map(|(a, b)| (PI - a) * b).sum();
    let asum: f64 = angles.iter().sum();
    let isum: f64 = interior_orders.iter().sum();
    let residual = (curvature_term + boundary_term - chi - vsum / (2.0 * PI) - isum + asum / (2.0 * PI)).abs();
    Ok(GaussBonnetReport {
        curvature_term,
        boundary_term,
        euler_characteristic: region.euler_characteristic,
        exterior_angles: angles,
        vertex_orders,
        interior_orders,
        residual,
    })
}

pub fn gauss_bonnet_residual(metric: &ConicalMetric, region: &RegionSpec) -> Result<f64> {
    Ok(gauss_bonnet_report(metric, region)?.residual)
}

/// Derivative at `ts[at]` of the quadratic through three points.
pub fn three_point_derivative(ts: [f64; 3], fs: [f64; 3], at: usize) -> f64 {
    let x = ts[at];
    let mut d = 0.0;
    for j in 0..3 {
        let mut lp = 0.0;
        for m in 0..3 {
            if m == j {
                continue;
            }
            let mut term = 1.0 / (ts[j] - ts[m]);
            for k in 0..3 {
                if k != j && k != m {
                    term *= (x - ts[k]) / (ts[j] - ts[k]);
                }
            }
            lp += term;
        }
        d += fs[j] * lp;
    }
    d
}

/// Time derivative of a series at every index: centred inside, one-sided at the ends.
pub fn series_derivative(ts: &[f64], fs: &[f64]) -> Result<Vec<f64>> {
    let n = ts.len();
    if n < 3 {
        return Err(Error::Accuracy("at least three output times are needed for time differencing".into()));
    }
    Ok((0..n)
        .map(|i| {
            let k = i.clamp(1, n - 2);
            let at = i + 1 - k;
            three_point_derivative([ts[k - 1], ts[k], ts[k + 1]], [fs[k - 1], fs[k], fs[k + 1]], at)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaRatePoint {
    pub t: f64,
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
    pub relative: f64,
}

fn is_loop(record: &RunRecord) -> bool {
    record.anchors[0].is_some() && record.anchors[0] == record.anchors[1]
}

/// Cone points enclosed by the first snapshot, excluding anchors.
fn interior_cones(metric: &ConicalMetric, record: &RunRecord) -> Vec<usize> {
    let poly = record.snapshots[0].points();
    metric
        .singular_points()
        .iter()
        .enumerate()
        .filter(|(j, p)| !record.anchors.contains(&Some(*j)) && winding_number(&poly, p.position()) != 0)
        .map(|(j, _)| j)
        .collect()
}

/// Measured `d𝒜/dt` against `-2π - Σ(π-α_j)β_j + Σα_j - 2πΣ_int β_j`.
pub fn area_rate_check(metric: &ConicalMetric, record: &RunRecord) -> Result<Vec<AreaRatePoint>> {
    if !metric.h().is_harmonic() {
        return Err(Error::Domain("area rate law needs a flat conical metric".into()));
    }
    if !(record.closed || is_loop(record)) {
        return Err(Error::Domain("area rate law needs a closed configuration".into()));
    }
    let diags = &record.diagnostics;
    let ts: Vec<f64> = diags.iter().map(|d| d.t).collect();
    let areas: Vec<f64> = diags
        .iter()
        .map(|d| d.area.ok_or_else(|| Error::Domain("diagnostics carry no area".into())))
        .collect::<Result<_>>()?;
    let rates = series_derivative(&ts, &areas)?;
    let interior: f64 = interior_cones(metric, record).iter().map(|&j| metric.singular_points()[j].beta).sum();
    let vertex_beta = if is_loop(record) { Some(metric.singular_points()[record.anchors[0].unwrap()].beta) } else { None };
    let mut out = Vec::with_capacity(diags.len());
    for (d, &measured) in diags.iter().zip(&rates) {
        let mut predicted = -2.0 * PI - 2.0 * PI * interior;
        if let Some(b) = vertex_beta {
            let alpha = *d.exterior_angles.first().ok_or_else(|| Error::Domain("missing exterior angle".into()))?;
            predicted += -(PI - alpha) * b + alpha;
        }
        let residual = (measured - predicted).abs();
        out.push(AreaRatePoint { t: d.t, measured, predicted, residual, relative: residual / predicted.abs() });
    }
    Ok(out)
}

/// Reference point for distance functions: the cone point at the start of
/// an anchored curve, else the first cone point, else `fallback`.
pub fn reference_point(metric: &ConicalMetric, start: Vec2, fallback: Vec2) -> (Vec2, Option<usize>) {
    if let Some(j) = metric.singular_at(start) {
        return (metric.singular_points()[j].position(), Some(j));
    }
    match metric.singular_points().first() {
        Some(p) => (p.position(), Some(0)),
        None => (fallback, None),
    }
}

/// `(1/2) max_s λ(γ)|γ - p|²`, which for one cone point and `h` is
/// `(1/2) max e^{2h}|γ - p|^{2+2β}`.
pub fn tmax_bound(metric: &ConicalMetric, base: &dyn ParametricCurve) -> Result<f64> {
    let (a, b) = base.domain();
    let n = 4000;
    let pts: Vec<Vec2> = (0..=n).map(|i| base.jet(a + (b - a) * i as f64 / n as f64).pos).collect();
    let m = if base.is_closed() { n } else { n + 1 };
    let centroid = pts[..m].iter().fold(Vec2::ZERO, |s, &p| s + p) / m as f64;
    let (p, cone) = reference_point(metric, base.endpoint(0), centroid);
    let mut best: f64 = 0.0;
    for i in 0..=n {
        let (end, tau) = if i <= n / 2 { (0, (b - a) * i as f64 / n as f64) } else { (1, (b - a) * (n - i) as f64 / n as f64) };
        let (j, off) = base.jet_near_end(end, tau);
        let anchored = cone.filter(|&c| metric.singular_at(base.endpoint(end)) == Some(c));
        let delta = if anchored.is_some() { off } else { j.pos - p };
        if delta.norm2() == 0.0 {
            continue;
        }
        let lam = metric.conformal_factor_at(j.pos, anchored.map(|c| (c, off)))?;
        best = best.max(lam * delta.norm2());
    }
    if !(best > 0.0) {
        return Err(Error::Geometry("base curve has no extent".into()));
    }
    Ok(0.5 * best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// `max (2t - d(s,t))`.
    pub lower: f64,
    /// `max (d(s,t) - max_s d(s,0))`.
    pub upper: f64,
    pub worst: f64,
    /// Upper violation for `e^{2h}|Γ - p|^{2+2β} + 2(1+β)²t`.
    pub upper_rescaled: f64,
}

fn distance_parts(metric: &ConicalMetric, record: &RunRecord) -> (Vec2, f64, Vec<Vec<f64>>) {
    let first = &record.snapshots[0];
    let pts0 = first.points();
    let m = if record.closed { pts0.len() } else { pts0.len().max(1) };
    let centroid = pts0[..m].iter().fold(Vec2::ZERO, |s, &p| s + p) / m as f64;
    let (p, cone) = reference_point(metric, pts0[0], centroid);
    let beta = cone.map_or(0.0, |j| metric.singular_points()[j].beta);
    let values = record
        .snapshots
        .iter()
        .map(|s| {
            s.points()
                .iter()
                .map(|z| (2.0 * metric.h().value(*z)).exp() * (*z - p).norm().powf(2.0 + 2.0 * beta))
                .collect()
        })
        .collect();
    (p, beta, values)
}

/// Worst violation of `2t ≤ d(s,t) ≤ max_s d(s,0)` over all emitted nodes,
/// `d = e^{2h}|Γ - p|^{2+2β} + 2t`.
pub fn distance_mp_check(metric: &ConicalMetric, record: &RunRecord) -> Result<DistanceReport> {
    if record.snapshots.is_empty() {
        return Err(Error::Input("empty trajectory".into()));
    }
    let (_, beta, values) = distance_parts(metric, record);
    let max0 = values[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * record.snapshots[0].t;
    let c = (1.0 + beta) * (1.0 + beta);
    let (mut lower, mut upper, mut resc) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (snap, vals) in record.snapshots.iter().zip(&values) {
        for &v in vals {
            let d = v + 2.0 * snap.t;
            lower = lower.max(2.0 * snap.t - d);
            upper = upper.max(d - max0);
            resc = resc.max(v + 2.0 * c * snap.t - max0);
        }
    }
    Ok(DistanceReport { lower, upper, worst: lower.max(upper), upper_rescaled: resc })
}

/// Residual norms of the evolution equations at one interior output time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResidual {
    pub t: f64,
    /// `max |μ_t + (k_g² - Φ_ζ) μ|`.
    pub speed: f64,
    /// `|L_t - [Φ] + ∫ k_g² dζ|`.
    pub length: f64,
    /// `max |(k_g)_t - (k_g)_ζζ - Φ (k_g)_ζ - k_g³ - k_g K_g|`.
    pub curvature: f64,
    /// `max |λ^{1/2} ⟨σ_t, ξ_σ⟩ - k_g|`.
    pub normal_speed: f64,
}

struct FrameGeometry {
    s: Vec<f64>,
    pos: Vec<Vec2>,
    tangent: Vec<Vec2>,
    normal: Vec<Vec2>,
    mu: Vec<f64>,
    lambda: Vec<f64>,
}

/// Nodes of a snapshot usable for spline differentiation: away from the
/// ends by `trim` (in base arc length) for open curves.
fn frame_nodes(snap: &Snapshot, closed: bool, trim: f64) -> Vec<usize> {
    let l_end = *snap.s.last().unwrap();
    (0..snap.s.len()).filter(|&i| closed || (snap.s[i] >= trim && snap.s[i] <= l_end - trim)).collect()
}

fn spline_over(s: &[f64], y: &[f64], closed: bool, period: f64) -> Result<CubicSpline> {
    if closed {
        let mut ss = s.to_vec();
        let mut yy = y.to_vec();
        ss.push(s[0] + period);
        yy.push(y[0]);
        CubicSpline::new(&ss, &yy, SplineBoundary::Periodic)
    } else {
        CubicSpline::new(s, y, SplineBoundary::NotAKnot)
    }
}

fn frame_geometry(metric: &ConicalMetric, snap: &Snapshot, idx: &[usize], closed: bool, period: f64) -> Result<FrameGeometry> {
    let s: Vec<f64> = idx.iter().map(|&i| snap.s[i]).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| snap.x[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| snap.y[i]).collect();
    let sx = spline_over(&s, &xs, closed, period)?;
    let sy = spline_over(&s, &ys, closed, period)?;
    let mut g = FrameGeometry { s: s.clone(), pos: vec![], tangent: vec![], normal: vec![], mu: vec![], lambda: vec![] };
    for (k, &si) in s.iter().enumerate() {
        let (x, y) = (sx.eval(si), sy.eval(si));
        let pos = Vec2::new(xs[k], ys[k]);
        let d1 = Vec2::new(x[1], y[1]);
        let sp = d1.norm();
        let tangent = d1 / sp;
        let normal = tangent.perp();
        let lam = metric.conformal_factor_at(pos, None)?;
        g.pos.push(pos);
        g.tangent.push(tangent);
        g.normal.push(normal);
        g.mu.push(lam.sqrt() * sp);
        g.lambda.push(lam);
    }
    Ok(g)
}

/// Residuals of the evolution equations and of the normal-speed identity
/// at every interior output time. Node data are differentiated by splines
/// in the base arc length and by three-point differences in time.
pub fn evolution_residuals(metric: &ConicalMetric, record: &RunRecord) -> Result<Vec<EvolutionResidual>> {
    let snaps = &record.snapshots;
    if snaps.len() < 3 {
        return Err(Error::Accuracy("at least three snapshots are needed for time differencing".into()));
    }
    let period = record.base_length;
    let trim = 1e-4 * period;
    let ts: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let lengths: Vec<f64> = record.diagnostics.iter().map(|d| d.length).collect();
    let l_rate = if lengths.len() == snaps.len() { Some(series_derivative(&ts, &lengths)?) } else { None };
    let mut out = Vec::new();
    for n in 1..snaps.len() - 1 {
        let trio = [&snaps[n - 1], &snaps[n], &snaps[n + 1]];
        let tt = [trio[0].t, trio[1].t, trio[2].t];
        if !(tt[0] < tt[1] && tt[1] < tt[2]) {
            return Err(Error::Input("snapshot times must increase".into()));
        }
        // nodes common to the three frames
        let mid_idx = frame_nodes(trio[1], record.closed, trim);
        let mut common: Vec<(usize, usize, usize)> = Vec::new();
        for &i in &mid_idx {
            let s = trio[1].s[i];
            let a = trio[0].s.iter().position(|&v| v == s);
            let c = trio[2].s.iter().position(|&v| v == s);
            if let (Some(a), Some(c)) = (a, c) {
                common.push((a, i, c));
            }
        }
        if common.len() < 8 {
            return Err(Error::Accuracy("too few common nodes between consecutive snapshots".into()));
        }
        let idx: [Vec<usize>; 3] = [
            common.iter().map(|c| c.0).collect(),
            common.iter().map(|c| c.1).collect(),
            common.iter().map(|c| c.2).collect(),
        ];
        let geo: Vec<FrameGeometry> =
            (0..3).map(|k| frame_geometry(metric, trio[k], &idx[k], record.closed, period)).collect::<Result<_>>()?;
        let g = &geo[1];
        let m = common.len();
        let mut phi = vec![0.0; m];
        let mut normal_speed: f64 = 0.0;
        let mut mu_t = vec![0.0; m];
        let mut kg_t = vec![0.0; m];
        let kg_mid: Vec<f64> = idx[1].iter().map(|&i| trio[1].k_g[i]).collect();
        for k in 0..m {
            let px = three_point_derivative(tt, [geo[0].pos[k].x, g.pos[k].x, geo[2].pos[k].x], 1);
            let py = three_point_derivative(tt, [geo[0].pos[k].y, g.pos[k].y, geo[2].pos[k].y], 1);
            let v = Vec2::new(px, py);
            let sl = g.lambda[k].sqrt();
            phi[k] = sl * v.dot(g.tangent[k]);
            normal_speed = normal_speed.max((sl * v.dot(g.normal[k]) - kg_mid[k]).abs());
            mu_t[k] = three_point_derivative(tt, [geo[0].mu[k], g.mu[k], geo[2].mu[k]], 1);
            let kgs = [trio[0].k_g[idx[0][k]], kg_mid[k], trio[2].k_g[idx[2][k]]];
            kg_t[k] = three_point_derivative(tt, kgs, 1);
        }
        let phi_sp = spline_over(&g.s, &phi, record.closed, period)?;
        let kg_sp = spline_over(&g.s, &kg_mid, record.closed, period)?;
        let mu_sp = spline_over(&g.s, &g.mu, record.closed, period)?;
        // residuals on nodes well inside for open curves
        let margin = if record.closed { f64::NEG_INFINITY } else { 0.05 * period };
        let (mut speed, mut curv): (f64, f64) = (0.0, 0.0);
        for k in 0..m {
            let s = g.s[k];
            if s < margin || s > period - margin {
                continue;
            }
            let mu = g.mu[k];
            let phi_z = phi_sp.eval(s)[1] / mu;
            speed = speed.max((mu_t[k] + (kg_mid[k] * kg_mid[k] - phi_z) * mu).abs());
            let kd = kg_sp.eval(s);
            let mu_s = mu_sp.eval(s)[1];
            let kz = kd[1] / mu;
            let kzz = (kd[2] - kd[1] * mu_s / mu) / (mu * mu);
            let kgauss = gauss_curvature(metric, g.pos[k])?;
            let kg = kg_mid[k];
            curv = curv.max((kg_t[k] - kzz - phi[k] * kz - kg * kg * kg - kg * kgauss).abs());
        }
        let length = match &l_rate {
            Some(r) => {
                let snap = trio[1];
                let pts = snap.points();
                let mut int = 0.0;
                let count = if record.closed { pts.len() } else { pts.len() - 1 };
                for i in 0..count {
                    let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                    let mid = 0.5 * (a + b);
                    let lam = match metric.conformal_factor_at(mid, None) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    let k2 = 0.5 * (snap.k_g[i].powi(2) + snap.k_g[(i + 1) % pts.len()].powi(2));
                    int += k2 * lam.sqrt() * a.dist(b);
                }
                (r[n] + int).abs()
            }
            None => f64::NAN,
        };
        out.push(EvolutionResidual { t: tt[1], speed, length, curvature: curv, normal_speed });
    }
    Ok(out)
}

/// Index of the snapshot closest to time `t`.
pub fn snapshot_near(record: &RunRecord, t: f64) -> Result<usize> {
    record
        .snapshots
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.t - t).abs().total_cmp(&(b.1.t - t).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Input("empty trajectory".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub beta0: f64,
    pub beta1: f64,
    /// Data regularity; 5/2 for smooth data.
    pub alpha: f64,
}

impl AsymptoticPrediction {
    pub fn smooth(beta0: f64, beta1: f64) -> Self {
        AsymptoticPrediction { beta0, beta1, alpha: 2.5 }
    }

    /// `ℓ₀ = min{0, -(1+2β₁)/(1+β₁), min_j (α-5/2)/(1+β_j), min_j (α-7/2-2β_j)/(1+β_j)}`.
    pub fn ell0(&self) -> Result<f64> {
        let (b0, b1, a) = (self.beta0, self.beta1, self.alpha);
        for b in [b0, b1] {
            if !(b > -1.0 && b < 0.0) {
                return Err(Error::Domain(format!("order {b} outside (-1, 0)")));
            }
        }
        if b0 > b1 {
            return Err(Error::Domain("orders must satisfy β₀ ≤ β₁".into()));
        }
        if !(a > (1.5 - b0).max(2.5 + b1)) {
            return Err(Error::Domain(format!("α = {a} must exceed max(3/2 - β₀, 5/2 + β₁)")));
        }
        let mut l = 0f64.min(-(1.0 + 2.0 * b1) / (1.0 + b1));
        for b in [b0, b1] {
            l = l.min((a - 2.5) / (1.0 + b)).min((a - 3.5 - 2.0 * b) / (1.0 + b));
        }
        Ok(l)
    }
}

/// Predicted decay exponent `(1 + ℓ₀)(1 + β_j)` of `|k_g|` at endpoint `j`.
pub fn predicted_exponent(prediction: &AsymptoticPrediction, endpoint: usize) -> Result<f64> {
    let l = prediction.ell0()?;
    let b = match endpoint {
        0 => prediction.beta0,
        1 => prediction.beta1,
        _ => return Err(Error::Input("endpoint must be 0 or 1".into())),
    };
    Ok((1.0 + l) * (1.0 + b))
}

/// Least-squares slope of `log|k_g|` against `log r`, `r` the base arc
/// length to endpoint `j`, over nodes with `r` in the window.
pub fn asymptotic_exponent(record: &RunRecord, endpoint: usize, window: (f64, f64), t: f64) -> Result<f64> {
    if record.closed {
        return Err(Error::Domain("closed runs have no pinned ends".into()));
    }
    let snap = &record.snapshots[snapshot_near(record, t)?];
    let l = record.base_length;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &s) in snap.s.iter().enumerate() {
        let r = if endpoint == 0 { s } else { l - s };
        let k = snap.k_g[i].abs();
        if r >= window.0 && r <= window.1 && k > 0.0 && k.is_finite() {
            xs.push(r.ln());
            ys.push(k.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::Accuracy(format!("only {} nodes with nonzero k_g in the fitting window", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub series: Vec<(f64, f64)>,
    pub convex_start: bool,
    pub flagged: bool,
}

/// `min_s k_g` per emitted time; flagged when a convex start dips below -1e-4.
pub fn convexity_monitor(record: &RunRecord) -> ConvexityReport {
    let series: Vec<(f64, f64)> = record.diagnostics.iter().map(|d| (d.t, d.min_kg)).collect();
    let convex_start = series.first().map_or(false, |s| s.1 >= 0.0);
    let flagged = convex_start && series.iter().any(|s| s.1 < -1e-4);
    ConvexityReport { series, convex_start, flagged }
}

/// Whether lengths never increase (up to `tol`, relative).
pub fn length_nonincreasing(record: &RunRecord, tol: f64) -> bool {
    record.diagnostics.windows(2).all(|w| w[1].length <= w[0].length * (1.0 + tol))
}

/// Whether anchored endpoints of every snapshot sit exactly on their cone points.
pub fn endpoints_pinned(metric: &ConicalMetric, record: &RunRecord) -> bool {
    if record.closed {
        return true;
    }
    record.snapshots.iter().all(|s| {
        let n = s.x.len();
        let ends = [Vec2::new(s.x[0], s.y[0]), Vec2::new(s.x[n - 1], s.y[n - 1])];
        (0..2).all(|e| match record.anchors[e] {
            Some(j) => {
                let p = metric.singular_points()[j].position();
                ends[e].x.to_bits() == p.x.to_bits() && ends[e].y.to_bits() == p.y.to_bits()
            }
            None => true,
        })
    })
}
