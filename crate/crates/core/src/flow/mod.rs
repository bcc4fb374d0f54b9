//! Degenerate curve shortening flow of graphs `σ = γ + d(s) u ξ` over a
//! base curve pinned at cone points.
//!
//! The unknown `u` lives at cell centres of the desingularized coordinate
//! `x ∈ (0, 1)`. Time stepping is linearly implicit in the second- and
//! first-order terms (frozen coefficients, tridiagonal solve) and explicit
//! in the rest. Closed base curves avoiding the cone points are evolved
//! with periodic cells and `d ≡ 1`.

pub mod base;
pub mod graph;
pub mod grid;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{shoelace, ParametricCurve, SampledCurve};
use crate::error::{Error, Result};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::metric::{signed_metric_area, ConicalMetric, Offset};
use crate::vec2::{signed_angle, Vec2};

pub use base::BaseCurve;
pub use graph::{graph_curvature, graph_geodesic_curvature, graph_normal, graph_point, BaseFrame, GraphPoint};
pub use grid::{d_cutoff, d_cutoff_jet, DesingularMap, GridPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub cells: usize,
    pub dt0: f64,
    pub cfl: f64,
    pub t_end: f64,
    /// Stop when `max |k_g|` exceeds this.
    pub k_max: f64,
    pub dt_min: f64,
    /// Output cadence in time units.
    pub output_every: f64,
    /// Stop with a graph-validity signal when `max |k w|` exceeds this.
    pub kw_stop: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { cells: 256, dt0: 1e-3, cfl: 0.5, t_end: 0.05, k_max: 1e4, dt_min: 1e-12, output_every: 1e-3, kw_stop: 0.45 }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.cells < 32 {
            return bad("cells must be at least 32");
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad("cfl must lie in (0, 1)");
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt0 && self.dt0.is_finite()) {
            return bad("need 0 < dt_min < dt0");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if !(self.output_every > 0.0) {
            return bad("output_every must be positive");
        }
        if !(self.k_max > 0.0) {
            return bad("k_max must be positive");
        }
        if !(self.kw_stop > 0.0 && self.kw_stop < 0.5) {
            return bad("kw_stop must lie in (0, 1/2)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    NearSingularity,
    GraphValidity,
    InvariantAbort,
}

impl StopReason {
    pub fn exit_code(self) -> i32 {
        match self {
            StopReason::Horizon => 0,
            StopReason::NearSingularity => 3,
            StopReason::GraphValidity => 4,
            StopReason::InvariantAbort => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFlowState {
    pub t: f64,
    pub dt: f64,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub length: f64,
    pub area: Option<f64>,
    pub min_kg: f64,
    pub max_kg: f64,
    pub max_abs_wt: f64,
    pub exterior_angles: Vec<f64>,
    pub max_d: f64,
    pub max_kw: f64,
}

/// Node data of one emitted state: base arc length `s`, position of `σ`,
/// graph height `w` and geodesic curvature. Anchored ends are included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub k_g: Vec<f64>,
}

impl Snapshot {
    pub fn points(&self) -> Vec<Vec2> {
        self.x.iter().zip(&self.y).map(|(&x, &y)| Vec2::new(x, y)).collect()
    }
}

/// The emitted part of a run: what is written to disk and what the
/// validators consume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub closed: bool,
    pub anchors: [Option<usize>; 2],
    pub base_length: f64,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub record: RunRecord,
    pub states: Vec<GraphFlowState>,
    pub stop: StopReason,
    pub message: String,
    pub steps: usize,
    pub rejections: usize,
}

impl Trajectory {
    pub fn t_stop(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.record.snapshots
    }

    pub fn diagnostics(&self) -> &[DiagnosticsRecord] {
        &self.record.diagnostics
    }
}

/// Geometry attached to one cell.
#[derive(Clone, Debug)]
pub struct Cell {
    pub grid: GridPoint,
    /// `d, d', d''` with respect to normalized arc length.
    pub d: [f64; 3],
    pub frame: BaseFrame,
}

/// Pointwise evaluation of the flow at every cell.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub points: Vec<GraphPoint>,
    pub w: Vec<f64>,
    pub w_s: Vec<f64>,
    pub u_t: Vec<f64>,
    /// Frozen coefficients of `u_xx` and `u_x`.
    pub diff: Vec<f64>,
    pub drift: Vec<f64>,
    /// `|∂F/∂u|` with the derivatives held fixed.
    pub lipschitz: Vec<f64>,
    pub max_kw: f64,
    pub max_abs_kg: f64,
}

/// A configured flow problem: metric, base curve, grid and stepping rules.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    metric: ConicalMetric,
    base: BaseCurve,
    config: FlowConfig,
    periodic: bool,
    map: Option<DesingularMap>,
    cells: Vec<Cell>,
    h: f64,
    end_frames: [BaseFrame; 2],
    reference: Vec2,
    reference_cone: Option<usize>,
    diam: f64,
    orientation: f64,
}

impl FlowProblem {
    pub fn new(metric: &ConicalMetric, curve: Arc<dyn ParametricCurve>, config: &FlowConfig) -> Result<Self> {
        config.validate()?;
        let base = BaseCurve::new(metric, curve)?;
        let periodic = base.is_closed();
        let n = config.cells;
        let h = 1.0 / n as f64;
        let map = if periodic {
            None
        } else {
            let b = base.anchors().map(|a| metric.singular_points()[a.unwrap()].beta);
            Some(DesingularMap::new(b[0], b[1])?)
        };
        let cells: Vec<Cell> = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                let (grid, d) = match &map {
                    Some(m) => {
                        let g = m.point(x);
                        (g, grid::d_cutoff_pair(g.s, g.s_rev))
                    }
                    None => (GridPoint { x, s: x, s_rev: 1.0 - x, dx: 1.0, ddx: 0.0 }, [1.0, 0.0, 0.0]),
                };
                Cell { grid, d, frame: base.frame(grid.s, grid.s_rev) }
            })
            .collect();
        let end_frames = [base.frame_from_end(0, 0.0), base.frame_from_end(1, 0.0)];
        let samples: Vec<Vec2> = (0..=256).map(|i| base.frame(i as f64 / 256.0, 1.0 - i as f64 / 256.0).pos).collect();
        let (mut lo, mut hi) = (samples[0], samples[0]);
        for p in &samples {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let diam = (hi - lo).norm();
        let (reference, reference_cone) = match base.anchors()[0] {
            Some(j) => (metric.singular_points()[j].position(), Some(j)),
            None => match metric.singular_points().first() {
                Some(p) => (p.position(), Some(0)),
                None => {
                    let m = samples.len() - 1;
                    let c = samples[..m].iter().fold(Vec2::ZERO, |a, &b| a + b);
                    ((1.0 / m as f64) * c, None)
                }
            },
        };
        let orientation = if shoelace(&samples) >= 0.0 { 1.0 } else { -1.0 };
        Ok(FlowProblem {
            metric: metric.clone(),
            base,
            config: config.clone(),
            periodic,
            map,
            cells,
            h,
            end_frames,
            reference,
            reference_cone,
            diam,
            orientation,
        })
    }

    pub fn metric(&self) -> &ConicalMetric {
        &self.metric
    }

    pub fn base(&self) -> &BaseCurve {
        &self.base
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn map(&self) -> Option<&DesingularMap> {
        self.map.as_ref()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Whether the base is a loop: both ends on the same cone point.
    pub fn is_loop(&self) -> bool {
        let a = self.base.anchors();
        a[0].is_some() && a[0] == a[1]
    }

    pub fn initial_state(&self) -> GraphFlowState {
        GraphFlowState { t: 0.0, dt: self.config.dt0, u: vec![0.0; self.cells.len()] }
    }

    /// Central differences `(u_x, u_xx)` with reflecting ghosts at anchored
    /// ends and wrap-around for periodic grids.
    pub fn differences(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = u.len();
        let h = self.h;
        let mut ux = vec![0.0; n];
        let mut uxx = vec![0.0; n];
        for i in 0..n {
            let um = if i > 0 { u[i - 1] } else if self.periodic { u[n - 1] } else { u[0] };
            let up = if i + 1 < n { u[i + 1] } else if self.periodic { u[0] } else { u[n - 1] };
            ux[i] = (up - um) / (2.0 * h);
            uxx[i] = (up - 2.0 * u[i] + um) / (h * h);
        }
        (ux, uxx)
    }

    /// `(w, w_s, w_ss)` at cell `i`, derivatives in euclidean arc length of the base.
    pub fn graph_derivatives(&self, i: usize, u: f64, ux: f64, uxx: f64) -> [f64; 3] {
        let c = &self.cells[i];
        let [d, d1, d2] = c.d;
        let (x1, x2) = (c.grid.dx, c.grid.ddx);
        let l = self.base.length();
        let w = d * u;
        let ws = (d1 * u + d * x1 * ux) / l;
        let wss = (d2 * u + (2.0 * d1 * x1 + d * x2) * ux + d * x1 * x1 * uxx) / (l * l);
        [w, ws, wss]
    }

    fn check_degeneracy(&self, i: usize, p: &GraphPoint) -> Result<()> {
        for (j, cone) in self.metric.singular_points().iter().enumerate() {
            let (dist, scale) = match (p.offset, self.cells[i].frame.offset) {
                (Some((k, ds)), Some((_, dg))) if k == j => (ds.norm(), dg.norm()),
                _ => ((p.sigma - cone.position()).norm(), self.diam),
            };
            if dist < 1e-6 * scale {
                return Err(Error::Degeneracy(i));
            }
        }
        Ok(())
    }

    /// `u_t` at cell `i` together with the pointwise graph data.
    pub fn cell_rate(&self, i: usize, u: f64, ux: f64, uxx: f64) -> Result<(f64, GraphPoint, [f64; 3])> {
        let wd = self.graph_derivatives(i, u, ux, uxx);
        let p = graph_point(&self.metric, &self.cells[i].frame, wd[0], wd[1], wd[2])?;
        self.check_degeneracy(i, &p)?;
        Ok((p.w_t / self.cells[i].d[0], p, wd))
    }

    /// Right-hand side `u_t` at every cell.
    pub fn rhs(&self, state: &GraphFlowState) -> Result<Vec<f64>> {
        let (ux, uxx) = self.differences(&state.u);
        (0..state.u.len()).map(|i| Ok(self.cell_rate(i, state.u[i], ux[i], uxx[i])?.0)).collect()
    }

    /// Evaluates the flow at all cells and the frozen step coefficients.
    pub fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        let n = u.len();
        let (ux, uxx) = self.differences(u);
        let l = self.base.length();
        let mut e = Evaluation {
            points: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
            w_s: Vec::with_capacity(n),
            u_t: Vec::with_capacity(n),
            diff: Vec::with_capacity(n),
            drift: Vec::with_capacity(n),
            lipschitz: Vec::with_capacity(n),
            max_kw: 0.0,
            max_abs_kg: 0.0,
        };
        for i in 0..n {
            let (f, p, wd) = self.cell_rate(i, u[i], ux[i], uxx[i])?;
            let kw = self.cells[i].frame.k * wd[0];
            if kw.abs() >= 0.5 || p.a <= 0.5 {
                return Err(Error::GraphValidity(kw));
            }
            let x1 = self.cells[i].grid.dx;
            e.diff.push(x1 * x1 / (p.lambda * p.q * l * l));
            let dx = 1e-7 * (1.0 + ux[i].abs());
            let fp = self.cell_rate(i, u[i], ux[i] + dx, uxx[i])?.0;
            let fm = self.cell_rate(i, u[i], ux[i] - dx, uxx[i])?.0;
            e.drift.push((fp - fm) / (2.0 * dx));
            let du = 1e-7 * (1.0 + u[i].abs());
            let gp = self.cell_rate(i, u[i] + du, ux[i], uxx[i])?.0;
            let gm = self.cell_rate(i, u[i] - du, ux[i], uxx[i])?.0;
            e.lipschitz.push(((gp - gm) / (2.0 * du)).abs());
            e.max_kw = e.max_kw.max(kw.abs());
            e.max_abs_kg = e.max_abs_kg.max(p.k_g.abs());
            e.points.push(p);
            e.w.push(wd[0]);
            e.w_s.push(wd[1]);
            e.u_t.push(f);
        }
        Ok(e)
    }

    /// `cfl · min(h² / max diffusion, 1 / max Lipschitz)`.
    pub fn stable_dt(&self, e: &Evaluation) -> f64 {
        let a = e.diff.iter().cloned().fold(0.0, f64::max);
        let lip = e.lipschitz.iter().cloned().fold(0.0, f64::max);
        let mut dt = f64::INFINITY;
        if a > 0.0 {
            dt = dt.min(self.h * self.h / a);
        }
        if lip > 0.0 {
            dt = dt.min(1.0 / lip);
        }
        self.config.cfl * dt
    }

    /// One linearly implicit step of size `dt` from `state` with its
    /// evaluation `e`: `(I - dt M) Δ = dt F(u)`, `M` the frozen
    /// diffusion-drift stencil.
    pub fn step_with(&self, state: &GraphFlowState, e: &Evaluation, dt: f64) -> Result<(GraphFlowState, Evaluation)> {
        let n = state.u.len();
        let h = self.h;
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let (a, b) = (e.diff[i], e.drift[i]);
            let lo = a / (h * h) - b / (2.0 * h);
            let up = a / (h * h) + b / (2.0 * h);
            diag[i] += 2.0 * dt * a / (h * h);
            if !self.periodic && i == 0 {
                diag[i] -= dt * lo;
            } else {
                lower[i] = -dt * lo;
            }
            if !self.periodic && i == n - 1 {
                diag[i] -= dt * up;
            } else {
                upper[i] = -dt * up;
            }
            rhs[i] = dt * e.u_t[i];
        }
        let delta = if self.periodic {
            solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs)?
        } else {
            solve_tridiagonal(&lower, &diag, &upper, &rhs)?
        };
        let u: Vec<f64> = state.u.iter().zip(&delta).map(|(a, b)| a + b).collect();
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite state".into()));
        }
        let next = GraphFlowState { t: state.t + dt, dt, u };
        let ev = self.evaluate(&next.u)?;
        Ok((next, ev))
    }

    /// One adaptive step: the stable step size capped by `dt0` and `limit`,
    /// halved on rejection up to 20 times.
    pub fn step(&self, state: &GraphFlowState, e: &Evaluation, limit: f64) -> StepOutcome {
        let mut dt = self.config.dt0.min(self.stable_dt(e)).min(limit);
        if dt < self.config.dt_min && dt < limit {
            return StepOutcome::TooSmall(dt);
        }
        let mut last = String::new();
        for rejections in 0..=20 {
            match self.step_with(state, e, dt) {
                Ok((s, ev)) => return StepOutcome::Accepted { state: s, eval: ev, rejections },
                Err(err) => {
                    last = err.to_string();
                    dt *= 0.5;
                    if dt < self.config.dt_min {
                        return StepOutcome::TooSmall(dt);
                    }
                }
            }
        }
        StepOutcome::Abort(last)
    }

    /// Extrapolated `u` at the ends `x = 0, 1` from the three nearest cells.
    pub fn end_values(&self, u: &[f64]) -> [f64; 2] {
        let n = u.len();
        [(15.0 * u[0] - 10.0 * u[1] + 3.0 * u[2]) / 8.0, (15.0 * u[n - 1] - 10.0 * u[n - 2] + 3.0 * u[n - 3]) / 8.0]
    }

    /// One-sided chart tangents of `σ` at the two anchored ends, both in the
    /// forward direction.
    pub fn end_tangents(&self, u: &[f64]) -> [Vec2; 2] {
        let [u0, u1] = self.end_values(u);
        let l = self.base.length();
        let [f0, f1] = &self.end_frames;
        [f0.tangent + (u0 / l) * f0.normal, f1.tangent - (u1 / l) * f1.normal]
    }

    /// Base arc length of cell `i`.
    fn cell_s(&self, i: usize) -> f64 {
        let g = &self.cells[i].grid;
        let l = self.base.length();
        if g.s <= 0.5 { g.s * l } else { l - g.s_rev * l }
    }

    fn d_value(&self, p: &GraphPoint) -> Result<f64> {
        let (e2h, r, beta) = match self.reference_cone {
            Some(j) => {
                let d = match p.offset {
                    Some((k, d)) if k == j => d,
                    _ => p.sigma - self.reference,
                };
                ((2.0 * self.metric.h().value(p.sigma)).exp(), d.norm(), self.metric.singular_points()[j].beta)
            }
            None => ((2.0 * self.metric.h().value(p.sigma)).exp(), (p.sigma - self.reference).norm(), 0.0),
        };
        Ok(e2h * r.powf(2.0 + 2.0 * beta))
    }

    pub fn diagnostics(&self, state: &GraphFlowState, e: &Evaluation) -> Result<DiagnosticsRecord> {
        let l = self.base.length();
        let mut length = 0.0;
        let (mut min_kg, mut max_kg, mut max_wt) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        let mut max_d: f64 = 0.0;
        for (i, p) in e.points.iter().enumerate() {
            length += p.lambda.sqrt() * p.q.sqrt() * l / self.cells[i].grid.dx * self.h;
            min_kg = min_kg.min(p.k_g);
            max_kg = max_kg.max(p.k_g);
            max_wt = max_wt.max(p.w_t.abs());
            max_d = max_d.max(self.d_value(p)?);
        }
        let area = if self.periodic || self.is_loop() {
            let mut poly: Vec<Vec2> = Vec::with_capacity(e.points.len() + 1);
            if !self.periodic {
                poly.push(self.base.endpoint(0));
            }
            for p in &e.points {
                if poly.last() != Some(&p.sigma) {
                    poly.push(p.sigma);
                }
            }
            while poly.len() > 1 && poly.last() == poly.first() {
                poly.pop();
            }
            Some(signed_metric_area(&self.metric, &poly)?.abs())
        } else {
            None
        };
        let exterior_angles = if self.is_loop() {
            let [t_out, t_in] = self.end_tangents(&state.u);
            vec![self.orientation * signed_angle(t_in, t_out)]
        } else {
            Vec::new()
        };
        Ok(DiagnosticsRecord {
            t: state.t,
            length,
            area,
            min_kg,
            max_kg,
            max_abs_wt: max_wt,
            exterior_angles,
            max_d: max_d + 2.0 * state.t,
            max_kw: e.max_kw,
        })
    }

    pub fn snapshot(&self, state: &GraphFlowState, e: &Evaluation) -> Snapshot {
        let l = self.base.length();
        let mut snap = Snapshot { t: state.t, s: vec![], x: vec![], y: vec![], w: vec![], k_g: vec![] };
        let push = |s: f64, z: Vec2, w: f64, kg: f64, snap: &mut Snapshot| {
            if let (Some(&ls), Some(&lx), Some(&ly)) = (snap.s.last(), snap.x.last(), snap.y.last()) {
                if !(s > ls) || (z.x == lx && z.y == ly) {
                    return;
                }
            }
            snap.s.push(s);
            snap.x.push(z.x);
            snap.y.push(z.y);
            snap.w.push(w);
            snap.k_g.push(kg);
        };
        if !self.periodic {
            push(0.0, self.base.endpoint(0), 0.0, 0.0, &mut snap);
        }
        let end = if self.periodic { None } else { Some(self.base.endpoint(1)) };
        for (i, p) in e.points.iter().enumerate() {
            let s = self.cell_s(i);
            if let Some(q) = end {
                if !(s < l) || p.sigma == q {
                    continue;
                }
            }
            push(s, p.sigma, e.w[i], p.k_g, &mut snap);
        }
        if let Some(q) = end {
            push(l, q, 0.0, 0.0, &mut snap);
        }
        snap
    }

    /// `σ = γ + wξ` at the state's nodes, anchored ends included.
    pub fn reconstruct(&self, state: &GraphFlowState) -> Result<SampledCurve> {
        let e = self.evaluate(&state.u)?;
        let snap = self.snapshot(state, &e);
        let mut nodes = snap.points();
        let mut params = snap.s.clone();
        if self.periodic {
            nodes.push(nodes[0]);
            params.push(params[0] + self.base.length());
            SampledCurve::new(nodes, params, true, [None, None])
        } else {
            SampledCurve::new(nodes, params, false, self.base.anchors())
        }
    }

    /// Tangential speed `Φ` at the snapshot nodes order: anchored ends
    /// (where it vanishes) and cells.
    pub fn tangential_phi(&self, state: &GraphFlowState) -> Result<Vec<f64>> {
        let e = self.evaluate(&state.u)?;
        let mut out = Vec::with_capacity(e.points.len() + 2);
        if !self.periodic {
            out.push(0.0);
        }
        for (p, &ws) in e.points.iter().zip(&e.w_s) {
            out.push(graph::phi_from(p, ws));
        }
        if !self.periodic {
            out.push(0.0);
        }
        Ok(out)
    }

    /// Advances from `w ≡ 0` until a stopping rule fires.
    pub fn run(&self) -> Trajectory {
        let cfg = &self.config;
        let mut traj = Trajectory {
            record: RunRecord {
                closed: self.periodic,
                anchors: self.base.anchors(),
                base_length: self.base.length(),
                snapshots: vec![],
                diagnostics: vec![],
            },
            states: vec![],
            stop: StopReason::Horizon,
            message: String::new(),
            steps: 0,
            rejections: 0,
        };
        let mut state = self.initial_state();
        let mut eval = match self.evaluate(&state.u) {
            Ok(e) => e,
            Err(err) => {
                traj.stop = StopReason::InvariantAbort;
                traj.message = format!("initial state: {err}");
                return traj;
            }
        };
        let mut emitted = 0usize;
        let emit = |traj: &mut Trajectory, state: &GraphFlowState, eval: &Evaluation| -> bool {
            match self.diagnostics(state, eval) {
                Ok(d) => {
                    traj.record.diagnostics.push(d);
                    traj.record.snapshots.push(self.snapshot(state, eval));
                    traj.states.push(state.clone());
                    true
                }
                Err(err) => {
                    traj.stop = StopReason::InvariantAbort;
                    traj.message = format!("diagnostics at t = {}: {err}", state.t);
                    false
                }
            }
        };
        if !emit(&mut traj, &state, &eval) {
            return traj;
        }
        let tiny = 1e-12 * cfg.t_end;
        loop {
            if state.t >= cfg.t_end - tiny {
                traj.stop = StopReason::Horizon;
                break;
            }
            if eval.max_abs_kg > cfg.k_max {
                traj.stop = StopReason::NearSingularity;
                traj.message = format!("max |k_g| = {:e} exceeds k_max", eval.max_abs_kg);
                break;
            }
            if eval.max_kw > cfg.kw_stop {
                traj.stop = StopReason::GraphValidity;
                traj.message = format!("max |kw| = {:.4} exceeds {}", eval.max_kw, cfg.kw_stop);
                break;
            }
            let next_out = ((emitted + 1) as f64 * cfg.output_every).min(cfg.t_end);
            let limit = next_out - state.t;
            match self.step(&state, &eval, limit) {
                StepOutcome::Accepted { state: s, eval: e, rejections } => {
                    traj.steps += 1;
                    traj.rejections += rejections;
                    state = s;
                    eval = e;
                }
                StepOutcome::TooSmall(dt) => {
                    traj.stop = StopReason::NearSingularity;
                    traj.message = format!("time step {dt:e} below dt_min");
                    break;
                }
                StepOutcome::Abort(msg) => {
                    traj.stop = StopReason::InvariantAbort;
                    traj.message = format!("20 rejected steps: {msg}");
                    break;
                }
            }
            if (next_out - state.t).abs() <= tiny {
                state.t = next_out;
                emitted += 1;
                if !emit(&mut traj, &state, &eval) {
                    return traj;
                }
            }
        }
        if traj.states.last().map(|s| s.t) != Some(state.t) {
            emit(&mut traj, &state, &eval);
        }
        traj
    }
}

pub enum StepOutcome {
    Accepted { state: GraphFlowState, eval: Evaluation, rejections: usize },
    TooSmall(f64),
    Abort(String),
}

/// Builds the problem and runs it.
pub fn run(metric: &ConicalMetric, base: Arc<dyn ParametricCurve>, config: &FlowConfig) -> Result<Trajectory> {
    Ok(FlowProblem::new(metric, base, config)?.run())
}

/// Offset of `σ` from cone point `j`, using the anchored offset when present.
pub fn offset_from(metric: &ConicalMetric, p: &GraphPoint, j: usize) -> Vec2 {
    let o: Offset = p.offset;
    metric.delta(j, p.sigma, o)
}
