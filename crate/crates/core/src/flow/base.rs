//! Arc-length frames of the base curve, measured from either end.

use std::sync::Arc;

use crate::curve::ParametricCurve;
use crate::error::{Error, Result};
use crate::flow::graph::BaseFrame;
use crate::metric::ConicalMetric;
use crate::quadrature::fixed_gl20;
use crate::vec2::Vec2;

const TABLE_PIECES: usize = 128;

/// Cumulative arc length from one end as a function of the parameter offset.
#[derive(Clone, Debug)]
struct ArcTable {
    end: usize,
    tau: Vec<f64>,
    cum: Vec<f64>,
}

/// A base curve with a precomputed arc-length parametrization. Points are
/// addressed by the arc length from the nearer end so that positions close
/// to an anchored end keep full relative precision.
#[derive(Clone)]
pub struct BaseCurve {
    curve: Arc<dyn ParametricCurve>,
    anchors: [Option<usize>; 2],
    tables: [ArcTable; 2],
    length: f64,
}

impl std::fmt::Debug for BaseCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BaseCurve").field("anchors", &self.anchors).field("length", &self.length).finish()
    }
}

impl BaseCurve {
    /// Anchors are detected from the metric: an open curve must start and end
    /// on singular points, a closed curve must avoid them.
    pub fn new(metric: &ConicalMetric, curve: Arc<dyn ParametricCurve>) -> Result<Self> {
        let (a, b) = curve.domain();
        if !(b > a) {
            return Err(Error::Input("empty base curve domain".into()));
        }
        let anchors = if curve.is_closed() {
            [None, None]
        } else {
            let s = [metric.singular_at(curve.endpoint(0)), metric.singular_at(curve.endpoint(1))];
            if s[0].is_none() || s[1].is_none() {
                return Err(Error::Input("open base curves must start and end on singular points".into()));
            }
            s
        };
        let half = 0.5 * (b - a);
        let mut breaks: Vec<f64> = curve.breakpoints();
        breaks.sort_by(f64::total_cmp);
        let tables = [0, 1].map(|end| {
            let mut tau: Vec<f64> = (0..=TABLE_PIECES).map(|i| half * i as f64 / TABLE_PIECES as f64).collect();
            for &t in &breaks {
                let o = if end == 0 { t - a } else { b - t };
                if o > 0.0 && o < half && tau.iter().all(|&x| (x - o).abs() > 1e-12 * half) {
                    tau.push(o);
                }
            }
            tau.sort_by(f64::total_cmp);
            let mut cum = vec![0.0];
            for w in tau.windows(2) {
                let seg = fixed_gl20(|x| curve.jet_near_end(end, x).0.speed(), w[0], w[1]);
                cum.push(cum.last().unwrap() + seg);
            }
            ArcTable { end, tau, cum }
        });
        let length = tables[0].cum.last().unwrap() + tables[1].cum.last().unwrap();
        for t in &tables {
            for w in t.tau.windows(2) {
                let j = curve.jet_near_end(t.end, 0.5 * (w[0] + w[1])).0;
                j.check_regular()?;
            }
        }
        Ok(BaseCurve { curve, anchors, tables, length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn anchors(&self) -> [Option<usize>; 2] {
        self.anchors
    }

    pub fn is_closed(&self) -> bool {
        self.curve.is_closed()
    }

    pub fn curve(&self) -> &Arc<dyn ParametricCurve> {
        &self.curve
    }

    pub fn endpoint(&self, end: usize) -> Vec2 {
        self.curve.endpoint(end)
    }

    /// Parameter offset from `end` at arc length `ell` from that end.
    fn tau_at(&self, end: usize, ell: f64) -> f64 {
        let t = &self.tables[end];
        let speed = |x: f64| self.curve.jet_near_end(end, x).0.speed();
        let k = match t.cum.iter().position(|&c| c > ell) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => t.cum.len() - 2,
        };
        let (t0, t1) = (t.tau[k], t.tau[k + 1]);
        let mut tau = (t0 + (ell - t.cum[k]) / speed(t0)).clamp(t0, t1);
        for _ in 0..30 {
            let f = t.cum[k] + fixed_gl20(speed, t0, tau) - ell;
            let next = (tau - f / speed(tau)).clamp(t0, t1);
            let done = (next - tau).abs() <= 1e-16 * (tau.abs() + 1e-300) || next == tau;
            tau = next;
            if done {
                break;
            }
        }
        tau
    }

    /// Frame at arc length `ell` from `end`, oriented along the forward
    /// direction of the curve.
    pub fn frame_from_end(&self, end: usize, ell: f64) -> BaseFrame {
        let tau = if ell <= 0.0 { 0.0 } else { self.tau_at(end, ell) };
        let (j, off) = self.curve.jet_near_end(end, tau);
        let offset = self.anchors[end].map(|idx| (idx, off));
        BaseFrame {
            pos: j.pos,
            tangent: j.tangent(),
            normal: j.normal(),
            k: j.curvature(),
            k_s: j.curvature_derivative(),
            offset,
        }
    }

    /// Frame at normalized arc length `s`, with `s_rev = 1 - s` given precisely.
    pub fn frame(&self, s: f64, s_rev: f64) -> BaseFrame {
        if s <= 0.5 {
            self.frame_from_end(0, s * self.length)
        } else {
            self.frame_from_end(1, s_rev * self.length)
        }
    }
}
