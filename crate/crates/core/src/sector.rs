//! Flat-cone sector isometry, a reference planar curve shortening solver,
//! Hausdorff distances and the figure-eight doubling of a loop.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{arclength_reparam, shoelace, ArcLengthMode, CurveJet, ParametricCurve, SampledCurve};
use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, StopReason};
use crate::jet::Jet;
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::metric::{metric_length, ConicalMetric};
use crate::vec2::Vec2;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > -1.0 && beta <= 0.0) {
        return Err(Error::Domain(format!("cone order {beta} outside (-1, 0]")));
    }
    Ok(())
}

/// Chart angle in `[0, 2π)`; the slit is the positive real axis.
fn slit_angle(z: Vec2) -> f64 {
    let a = z.y.atan2(z.x);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// `r e^{it} ↦ (r^{1+β}/(1+β)) e^{i(1+β)t}` with `t ∈ [0, 2π)`.
pub fn to_sector(z: Vec2, beta: f64) -> Result<Vec2> {
    check_beta(beta)?;
    let r = z.norm();
    if r == 0.0 {
        return Ok(Vec2::ZERO);
    }
    let b1 = 1.0 + beta;
    Ok(Vec2::polar(r.powf(b1) / b1, b1 * slit_angle(z)))
}

/// Inverse of [`to_sector`] on the sector of opening `2π(1+β)`.
pub fn from_sector(w: Vec2, beta: f64) -> Result<Vec2> {
    check_beta(beta)?;
    let rho = w.norm();
    if rho == 0.0 {
        return Ok(Vec2::ZERO);
    }
    let b1 = 1.0 + beta;
    let psi = slit_angle(w);
    if psi >= 2.0 * PI * b1 {
        return Err(Error::Domain(format!("angle {psi} outside the sector of opening {}", 2.0 * PI * b1)));
    }
    Ok(Vec2::polar((b1 * rho).powf(1.0 / b1), psi / b1))
}

/// Maps points to the sector, rejecting paths that cross the slit.
pub fn map_points(points: &[Vec2], beta: f64) -> Result<Vec<Vec2>> {
    let mut prev: Option<f64> = None;
    let mut out = Vec::with_capacity(points.len());
    for &z in points {
        if z.norm() > 0.0 {
            let a = slit_angle(z);
            if let Some(p) = prev {
                if (a - p).abs() > PI {
                    return Err(Error::Domain("curve crosses the sector slit".into()));
                }
            }
            prev = Some(a);
        }
        out.push(to_sector(z, beta)?);
    }
    Ok(out)
}

fn polyline_length(p: &[Vec2]) -> f64 {
    p.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// `|L_g(γ) - L(sector image of γ)|` over the part of `curve` with
/// parameters in `[a + δ, b - δ]`, `δ = trim·(b - a)`, on the cone `|z|^{2β}|dz|²`.
/// The image length is a Richardson-extrapolated polyline length.
pub fn isometry_length_residual(beta: f64, curve: Arc<dyn ParametricCurve>, trim: f64) -> Result<f64> {
    check_beta(beta)?;
    let metric = if beta == 0.0 { ConicalMetric::euclidean() } else { ConicalMetric::flat_cone(beta)? };
    let (a, b) = curve.domain();
    let (lo, hi) = (a + trim * (b - a), b - trim * (b - a));
    let sub = Restricted { inner: curve, lo, hi };
    let lg = metric_length(&metric, &sub)?;
    let image = |n: usize| -> Result<f64> {
        let pts: Vec<Vec2> = (0..=n).map(|i| sub.jet(lo + (hi - lo) * i as f64 / n as f64).pos).collect();
        Ok(polyline_length(&map_points(&pts, beta)?))
    };
    let (l1, l2) = (image(4000)?, image(8000)?);
    Ok((lg - (4.0 * l2 - l1) / 3.0).abs())
}

struct Restricted {
    inner: Arc<dyn ParametricCurve>,
    lo: f64,
    hi: f64,
}

impl ParametricCurve for Restricted {
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn jet(&self, t: f64) -> CurveJet {
        self.inner.jet(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.inner.breakpoints().into_iter().filter(|&t| t > self.lo && t < self.hi).collect();
        b.insert(0, self.lo);
        b.push(self.hi);
        b
    }
}

/// One-sided directed Hausdorff distance from the vertices of `a` to the polyline `b`.
fn directed_hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter()
        .map(|&p| {
            let mut best = f64::INFINITY;
            for w in b.windows(2) {
                let d = w[1] - w[0];
                let l2 = d.norm2();
                let t = if l2 > 0.0 { ((p - w[0]).dot(d) / l2).clamp(0.0, 1.0) } else { 0.0 };
                best = best.min(p.dist(w[0] + t * d));
            }
            if b.len() == 1 {
                best = p.dist(b[0]);
            }
            best
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines, measured from
/// vertices to segments.
pub fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

pub fn diameter(points: &[Vec2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max(p.dist(*q));
        }
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanarCsfConfig {
    /// Time step as a multiple of the squared minimal edge length.
    pub cfl: f64,
    pub t_end: f64,
    /// Resample uniformly when max/min edge length exceeds this.
    pub redistribute_ratio: f64,
    /// Stop once the length falls below this fraction of the initial length.
    pub collapse_fraction: f64,
    pub max_steps: usize,
    /// Node count after the first redistribution; 0 keeps the input count.
    pub resample_nodes: usize,
}

impl Default for PlanarCsfConfig {
    fn default() -> Self {
        PlanarCsfConfig { cfl: 0.5, t_end: 1.0, redistribute_ratio: 1.5, collapse_fraction: 1e-2, max_steps: 2_000_000, resample_nodes: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanarStop {
    Horizon,
    Collapse,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarFrame {
    pub t: f64,
    pub nodes: Vec<Vec2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarCsfResult {
    pub closed: bool,
    pub frames: Vec<PlanarFrame>,
    pub stop: PlanarStop,
    pub t_stop: f64,
    pub steps: usize,
}

impl PlanarCsfResult {
    pub fn last(&self) -> &PlanarFrame {
        self.frames.last().expect("at least the initial frame")
    }

    /// Frame at exactly time `t`, if emitted.
    pub fn at(&self, t: f64) -> Option<&PlanarFrame> {
        self.frames.iter().find(|f| (f.t - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }
}

fn edges(x: &[Vec2], closed: bool) -> Vec<f64> {
    let n = x.len();
    let m = if closed { n } else { n - 1 };
    (0..m).map(|i| x[i].dist(x[(i + 1) % n])).collect()
}

fn redistribute(x: &[Vec2], closed: bool, n: usize) -> Result<Vec<Vec2>> {
    let mut pts = x.to_vec();
    if closed {
        pts.push(x[0]);
    }
    let c = SampledCurve::from_points(pts, closed, [None, None])?;
    let r = arclength_reparam(&c, ArcLengthMode::Euclidean, None, Some(if closed { n + 1 } else { n }))?;
    let mut nodes = r.nodes().to_vec();
    if closed {
        nodes.truncate(n);
    }
    Ok(nodes)
}

/// Semi-implicit planar curve shortening flow `X_t = X_ss` on a polyline.
/// Open polylines keep both end nodes fixed; closed ones carry no repeated
/// closing node. Frames are emitted at `output_times` (and at the start and stop).
pub fn planar_csf(initial: &[Vec2], closed: bool, config: &PlanarCsfConfig, output_times: &[f64]) -> Result<PlanarCsfResult> {
    if initial.len() < if closed { 4 } else { 3 } || (config.resample_nodes > 0 && config.resample_nodes < 4) {
        return Err(Error::Input("too few nodes for planar flow".into()));
    }
    if !(config.cfl > 0.0 && config.t_end > 0.0 && config.redistribute_ratio > 1.0) {
        return Err(Error::Config("planar flow needs positive cfl, t_end and a ratio above 1".into()));
    }
    let mut x = initial.to_vec();
    let l0: f64 = edges(&x, closed).iter().sum();
    let mut outs: Vec<f64> = output_times.iter().cloned().filter(|&t| t > 0.0 && t <= config.t_end).collect();
    outs.sort_by(f64::total_cmp);
    outs.dedup();
    let mut next_out = 0;
    let mut t = 0.0;
    let mut frames = vec![PlanarFrame { t, nodes: x.clone() }];
    let mut steps = 0;
    let stop = loop {
        let h = edges(&x, closed);
        let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let hmax = h.iter().cloned().fold(0.0, f64::max);
        let len: f64 = h.iter().sum();
        if !(hmin > 1e-14 * l0) || !len.is_finite() {
            break PlanarStop::Degenerate;
        }
        if len < config.collapse_fraction * l0 {
            break PlanarStop::Collapse;
        }
        if t >= config.t_end {
            break PlanarStop::Horizon;
        }
        if steps >= config.max_steps {
            break PlanarStop::Degenerate;
        }
        if hmax / hmin > config.redistribute_ratio {
            let m = if config.resample_nodes > 0 { config.resample_nodes } else { x.len() };
            x = redistribute(&x, closed, m)?;
            continue;
        }
        let n = x.len();
        let mut dt = config.cfl * hmin * hmin;
        let target = outs.get(next_out).cloned().unwrap_or(config.t_end).min(config.t_end);
        let mut hit = false;
        if t + dt >= target * (1.0 - 1e-14) {
            dt = target - t;
            hit = true;
        }
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            if !closed && (i == 0 || i == n - 1) {
                continue;
            }
            let hl = h[(i + n - 1) % n];
            let hr = h[i % h.len()];
            let a = 2.0 / ((hl + hr) * hl);
            let c = 2.0 / ((hl + hr) * hr);
            lower[i] = -dt * a;
            upper[i] = -dt * c;
            diag[i] = 1.0 + dt * (a + c);
        }
        let bx: Vec<f64> = x.iter().map(|p| p.x).collect();
        let by: Vec<f64> = x.iter().map(|p| p.y).collect();
        let (nx, ny) = if closed {
            (solve_cyclic_tridiagonal(&lower, &diag, &upper, &bx)?, solve_cyclic_tridiagonal(&lower, &diag, &upper, &by)?)
        } else {
            (solve_tridiagonal(&lower, &diag, &upper, &bx)?, solve_tridiagonal(&lower, &diag, &upper, &by)?)
        };
        for i in 0..n {
            if closed || (i != 0 && i != n - 1) {
                x[i] = Vec2::new(nx[i], ny[i]);
            }
        }
        steps += 1;
        t = if hit { target } else { t + dt };
        if hit && next_out < outs.len() && t == outs[next_out] {
            frames.push(PlanarFrame { t, nodes: x.clone() });
            next_out += 1;
        }
    };
    if frames.last().map_or(true, |f| f.t != t) {
        frames.push(PlanarFrame { t, nodes: x.clone() });
    }
    Ok(PlanarCsfResult { closed, frames, stop, t_stop: t, steps })
}

/// Enclosed area of a closed polyline, or of an open one closed by its chord.
pub fn polygon_area(nodes: &[Vec2]) -> f64 {
    shoelace(nodes).abs()
}

/// Doubling of a sampled loop from the origin back to the origin: the loop
/// followed by its point reflection traversed backwards. The result is
/// closed, repeats its first node at the end, and its node set is invariant
/// under `z ↦ -z`.
pub fn figure_eight(lobe: &SampledCurve) -> Result<SampledCurve> {
    let nodes = lobe.nodes();
    let n = nodes.len();
    if lobe.is_closed() || nodes[0] != Vec2::ZERO || nodes[n - 1] != Vec2::ZERO {
        return Err(Error::Domain("figure eight needs a loop anchored at the origin at both ends".into()));
    }
    let mut out: Vec<Vec2> = nodes[..n - 1].to_vec();
    out.extend((0..n - 1).map(|i| -nodes[n - 1 - i]));
    out.push(nodes[0]);
    let params = lobe.params();
    let span = params[n - 1] - params[0];
    let mut ps: Vec<f64> = params[..n - 1].iter().map(|p| p - params[0]).collect();
    ps.extend((0..n - 1).map(|i| 2.0 * span - (params[n - 1 - i] - params[0])));
    ps.push(2.0 * span);
    SampledCurve::new(out, ps, true, [None, None])
}

/// Sum of signed turning angles of a polyline (closed: including the wrap).
pub fn total_turning(nodes: &[Vec2], closed: bool) -> f64 {
    let n = nodes.len();
    let m = if closed { n } else { n - 1 };
    let e: Vec<Vec2> = (0..m).map(|i| nodes[(i + 1) % n] - nodes[i]).collect();
    let k = if closed { e.len() } else { e.len() - 1 };
    (0..k).map(|i| crate::vec2::signed_angle(e[i], e[(i + 1) % e.len()])).sum()
}

/// Hausdorff distance between the sector image of every snapshot and the
/// planar frame at the same time.
pub fn cross_validate(record: &flow::RunRecord, planar: &PlanarCsfResult, beta: f64) -> Result<Vec<(f64, f64)>> {
    if record.snapshots.len() != planar.frames.len() {
        return Err(Error::Input("metric and planar runs have different output times".into()));
    }
    record
        .snapshots
        .iter()
        .zip(&planar.frames)
        .map(|(s, f)| {
            if (s.t - f.t).abs() > 1e-12 * (1.0 + s.t.abs()) {
                return Err(Error::Input(format!("output times differ: {} vs {}", s.t, f.t)));
            }
            Ok((s.t, hausdorff(&map_points(&s.points(), beta)?, &f.nodes)))
        })
        .collect()
}

/// Doubling of a loop `A` through `c = A(a) = A(b)` by point reflection:
/// `A` on `[0, 1]` followed by `2c - A` traversed backwards on `[1, 2]`.
#[derive(Clone)]
pub struct FigureEight {
    lobe: Arc<dyn ParametricCurve>,
    center: Vec2,
}

impl FigureEight {
    pub fn new(lobe: Arc<dyn ParametricCurve>) -> Result<Self> {
        let (c0, c1) = (lobe.endpoint(0), lobe.endpoint(1));
        if c0 != c1 {
            return Err(Error::Input("lobe must start and end at the same point".into()));
        }
        Ok(FigureEight { lobe, center: c0 })
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    fn lobe_param(&self, u: f64) -> (f64, f64) {
        let (a, b) = self.lobe.domain();
        (a + u * (b - a), b - a)
    }

    fn reflect(&self, j: CurveJet, scale: f64) -> CurveJet {
        // d/dt [2c - A(a + (2 - t)(b - a))]
        let (s2, s3) = (scale * scale, scale * scale * scale);
        CurveJet { pos: 2.0 * self.center - j.pos, d1: scale * j.d1, d2: -s2 * j.d2, d3: s3 * j.d3 }
    }

    fn forward(j: CurveJet, scale: f64) -> CurveJet {
        CurveJet { pos: j.pos, d1: scale * j.d1, d2: scale * scale * j.d2, d3: scale * scale * scale * j.d3 }
    }

    /// One-sided jets at the junction `t = 1` (`end = 1`) or `t = 0 ≡ 2` (`end = 0`):
    /// `[incoming, outgoing]`.
    pub fn junction_jets(&self, end: usize) -> [CurveJet; 2] {
        let (_, scale) = self.lobe_param(0.0);
        if end == 1 {
            let a_end = self.lobe.jet_near_end(1, 0.0).0;
            [Self::forward(a_end, scale), self.reflect(a_end, scale)]
        } else {
            let a_start = self.lobe.jet_near_end(0, 0.0).0;
            [self.reflect(a_start, scale), Self::forward(a_start, scale)]
        }
    }

    /// Uniform samples on `[0, 2)`, `2m` nodes; node `m` is the second pass through the centre.
    pub fn sample(&self, m: usize) -> Vec<Vec2> {
        (0..2 * m).map(|i| self.jet(i as f64 / m as f64).pos).collect()
    }
}

impl ParametricCurve for FigureEight {
    fn domain(&self) -> (f64, f64) {
        (0.0, 2.0)
    }
    fn jet(&self, t: f64) -> CurveJet {
        if t <= 1.0 {
            let (p, scale) = self.lobe_param(t);
            Self::forward(self.lobe.jet(p), scale)
        } else {
            let (p, scale) = self.lobe_param(2.0 - t);
            self.reflect(self.lobe.jet(p), scale)
        }
    }
    fn endpoint(&self, _end: usize) -> Vec2 {
        self.center
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, 1.0, 2.0]
    }
    fn is_closed(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EightReport {
    /// `max |E(2 - t) - (2c - E(t))|` over dyadic samples `t = i/2^k`.
    pub symmetry_defect: f64,
    /// One-sided unit tangent mismatch at the two junctions.
    pub tangent_mismatch: [f64; 2],
    /// One-sided curvatures `[incoming, outgoing]` at the two junctions.
    pub junction_curvature: [[f64; 2]; 2],
}

pub fn eight_report(eight: &FigureEight, level: u32) -> Result<EightReport> {
    let c = eight.center();
    let samples = 1usize << level.min(20);
    let mut defect: f64 = 0.0;
    for i in 0..=samples {
        let t = i as f64 / samples as f64;
        let (p, q) = (eight.jet(t).pos, eight.jet(2.0 - t).pos);
        defect = defect.max((q - (2.0 * c - p)).norm());
    }
    let mut mismatch = [0.0; 2];
    let mut curv = [[0.0; 2]; 2];
    for end in 0..2 {
        let [a, b] = eight.junction_jets(end);
        a.check_regular()?;
        b.check_regular()?;
        mismatch[end] = (a.tangent() - b.tangent()).norm();
        curv[end] = [a.curvature(), b.curvature()];
    }
    Ok(EightReport { symmetry_defect: defect, tangent_mismatch: mismatch, junction_curvature: curv })
}

fn sinc_series(s: Jet) -> Jet {
    let s2 = s * s;
    let mut term = Jet::constant(1.0);
    let mut sum = Jet::constant(1.0);
    for k in 1..7 {
        term = term * s2 * (-1.0 / ((2 * k) as f64 * (2 * k + 1) as f64));
        sum = sum + term;
    }
    sum
}

/// `sin s / (s (π - s))`, smooth on `[0, π]`.
fn sine_ratio(s: Jet) -> Jet {
    let v = s.value();
    if v < 0.1 {
        sinc_series(s) * (Jet::constant(PI) - s).recip()
    } else if v > PI - 0.1 {
        let r = Jet::constant(PI) - s;
        sinc_series(r) * s.recip()
    } else {
        s.sin() / (s * (Jet::constant(PI) - s))
    }
}

/// Sector image of the unit tear drop on the cone of order -1/2,
/// `w = 2 √γ`, parametrized regularly by `v ∈ [0, 1]` through
/// `s = π sin²(πv/2)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SectorTearDrop;

impl ParametricCurve for SectorTearDrop {
    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn jet(&self, t: f64) -> CurveJet {
        let v = Jet::var(t);
        let half = (v.scale(0.5 * PI)).sin();
        let s = (half * half).scale(PI);
        // √(sin s) = (π/2) sin(πv) √(sin s / (s(π - s)))
        let root = v.scale(PI).sin().scale(0.5 * PI) * sine_ratio(s).sqrt();
        // q = γ / sin s = (-1 + i cos s) / (1 + cos² s), square root with argument in (0, π)
        let c = s.cos();
        let den = (c * c + 1.0).recip();
        let (qx, qy) = (-den, c * den);
        let modq = den.sqrt();
        let im = ((modq - qx).scale(0.5)).sqrt();
        let re = qy / im.scale(2.0);
        let mut j = CurveJet::from_jets((root * re).scale(2.0), (root * im).scale(2.0));
        if t == 0.0 || t == 1.0 {
            j.pos = Vec2::ZERO;
        }
        j
    }
    fn endpoint(&self, _end: usize) -> Vec2 {
        Vec2::ZERO
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorComparison {
    pub beta: f64,
    pub t: f64,
    pub cells: usize,
    pub planar_nodes: usize,
    /// `(t, Hausdorff distance)` at every shared output time.
    pub distances: Vec<(f64, f64)>,
    pub hausdorff: f64,
    pub diameter: f64,
    pub relative: f64,
    pub isometry_residual: f64,
    pub dcsf_stop: StopReason,
    pub planar_stop: PlanarStop,
}

/// Runs the pinned flow of `base` on the flat cone of order `beta` with its
/// vertex at the origin up to `t`, maps it to the sector, and compares with
/// planar curve shortening started from the mapped initial curve at
/// `outputs` equally spaced times.
pub fn sector_compare(
    beta: f64,
    base: Arc<dyn ParametricCurve>,
    flow_config: &FlowConfig,
    planar_nodes: usize,
    t: f64,
    outputs: usize,
) -> Result<SectorComparison> {
    let metric = ConicalMetric::flat_cone(beta)?;
    if base.endpoint(0) != Vec2::ZERO || base.endpoint(1) != Vec2::ZERO {
        return Err(Error::Input("sector comparison needs a loop pinned at the cone vertex".into()));
    }
    let cfg = FlowConfig { t_end: t, output_every: t / outputs.max(1) as f64, ..*flow_config };
    let traj = flow::run(&metric, base.clone(), &cfg)?;
    let last = traj.snapshots().last().ok_or_else(|| Error::Accuracy("flow produced no snapshot".into()))?;
    if (last.t - t).abs() > 1e-12 * (1.0 + t) {
        return Err(Error::Accuracy(format!("flow stopped at t = {} before {t}: {}", last.t, traj.message)));
    }
    let mapped0 = map_points(&traj.snapshots()[0].points(), beta)?;
    let times: Vec<f64> = traj.snapshots().iter().map(|s| s.t).collect();
    let pcfg = PlanarCsfConfig { t_end: t, resample_nodes: planar_nodes, ..PlanarCsfConfig::default() };
    let planar = planar_csf(&mapped0, false, &pcfg, &times)?;
    let distances = cross_validate(&traj.record, &planar, beta)?;
    let hd = distances.last().map_or(f64::NAN, |d| d.1);
    let diam = diameter(&planar.last().nodes);
    let isometry_residual = isometry_length_residual(beta, base, 0.05)?;
    Ok(SectorComparison {
        beta,
        t,
        cells: flow_config.cells,
        planar_nodes,
        distances,
        hausdorff: hd,
        diameter: diam,
        relative: hd / diam,
        isometry_residual,
        dcsf_stop: traj.stop,
        planar_stop: planar.stop,
    })
}
