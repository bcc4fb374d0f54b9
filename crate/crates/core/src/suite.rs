//! The validation suite run on stored artifacts.

use serde::{Deserialize, Serialize};

use crate::curve::ParametricCurve;
use crate::error::Error;
use crate::flow::RunRecord;
use crate::metric::ConicalMetric;
use crate::scenario::ValidationSpec;
use crate::validators::{
    area_rate_check, asymptotic_exponent, convexity_monitor, distance_mp_check, endpoints_pinned, evolution_residuals,
    length_nonincreasing, predicted_exponent, tmax_bound, AsymptoticPrediction,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    /// Measured quantity compared against `limit`.
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn check(name: &str, ok: bool, value: Option<f64>, limit: Option<f64>, detail: String) -> CheckResult {
    CheckResult { name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, value, limit, detail }
}

fn skipped(name: &str, detail: impl Into<String>) -> CheckResult {
    CheckResult { name: name.into(), status: Status::Skipped, value: None, limit: None, detail: detail.into() }
}

fn errored(name: &str, e: Error) -> CheckResult {
    match e {
        Error::Domain(m) => skipped(name, m),
        other => check(name, false, None, None, other.to_string()),
    }
}

pub fn run_suite(metric: &ConicalMetric, base: &dyn ParametricCurve, record: &RunRecord, spec: &ValidationSpec) -> ValidationReport {
    let c = spec.checks;
    let tol = spec.tolerances;
    let mut out = Vec::new();
    let t_stop = record.snapshots.last().map_or(0.0, |s| s.t);

    if c.pinned {
        let ok = endpoints_pinned(metric, record);
        out.push(check("pinned", ok, None, None, "anchored end nodes equal their cone points bitwise".into()));
    }
    if c.length {
        let ok = length_nonincreasing(record, tol.length_rel);
        let worst = record.diagnostics.windows(2).map(|w| w[1].length / w[0].length - 1.0).fold(f64::NEG_INFINITY, f64::max);
        out.push(check("length", ok, Some(worst), Some(tol.length_rel), "largest relative length increase between outputs".into()));
    }
    if c.distance {
        match distance_mp_check(metric, record) {
            Ok(r) => out.push(check(
                "distance",
                r.worst <= tol.distance,
                Some(r.worst),
                Some(tol.distance),
                format!("lower {:e}, upper {:e}, upper with (1+β)² time factor {:e}", r.lower, r.upper, r.upper_rescaled),
            )),
            Err(e) => out.push(errored("distance", e)),
        }
    }
    if c.convexity {
        let r = convexity_monitor(record);
        if !r.convex_start {
            out.push(skipped("convexity", "initial curve not convex"));
        } else {
            let min = r.series.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            out.push(check("convexity", min >= -tol.convexity, Some(min), Some(-tol.convexity), "minimum of min k_g over outputs".into()));
        }
    }
    if c.tmax {
        match tmax_bound(metric, base) {
            Ok(b) => out.push(check("tmax", t_stop <= b, Some(t_stop), Some(b), "stopping time against the maximal-time bound".into())),
            Err(e) => out.push(errored("tmax", e)),
        }
    }
    if c.area_rate {
        match area_rate_check(metric, record) {
            Ok(pts) => {
                let worst = pts.iter().map(|p| p.relative).fold(0.0, f64::max);
                out.push(check("area-rate", worst <= tol.area_rate_rel, Some(worst), Some(tol.area_rate_rel), "largest relative deviation of d𝒜/dt".into()));
            }
            Err(e) => out.push(errored("area-rate", e)),
        }
    }
    if c.evolution {
        match evolution_residuals(metric, record) {
            Ok(res) => {
                let mid = res.iter().min_by(|a, b| (a.t - 0.5 * t_stop).abs().total_cmp(&(b.t - 0.5 * t_stop).abs()));
                match mid {
                    Some(r) => out.push(check(
                        "normal-speed",
                        r.normal_speed <= tol.normal_speed,
                        Some(r.normal_speed),
                        Some(tol.normal_speed),
                        format!("at t = {}; speed {:e}, length {:e}, curvature {:e}", r.t, r.speed, r.length, r.curvature),
                    )),
                    None => out.push(skipped("normal-speed", "no interior output time")),
                }
            }
            Err(Error::Accuracy(m)) => out.push(skipped("normal-speed", m)),
            Err(e) => out.push(errored("normal-speed", e)),
        }
    }
    if c.asymptotics {
        out.push(asymptotics(metric, record, spec, t_stop));
    }
    let passed = out.iter().all(|c| c.status != Status::Fail);
    ValidationReport { passed, checks: out }
}

fn asymptotics(metric: &ConicalMetric, record: &RunRecord, spec: &ValidationSpec, t_stop: f64) -> CheckResult {
    let name = "asymptotics";
    let (Some(a0), Some(a1)) = (record.anchors[0], record.anchors[1]) else {
        return skipped(name, "needs both ends pinned");
    };
    let (b0, b1) = (metric.singular_points()[a0].beta, metric.singular_points()[a1].beta);
    let pred = AsymptoticPrediction::smooth(b0.min(b1), b0.max(b1));
    let tol = spec.tolerances;
    let window = (tol.exponent_window[0], tol.exponent_window[1]);
    let mut worst = f64::INFINITY;
    let mut detail = Vec::new();
    for end in 0..2 {
        let beta = if end == 0 { b0 } else { b1 };
        let j = if beta == pred.beta0 { 0 } else { 1 };
        let p = match predicted_exponent(&pred, j) {
            Ok(p) => p,
            Err(e) => return errored(name, e),
        };
        match asymptotic_exponent(record, end, window, 0.5 * t_stop) {
            Ok(slope) => {
                worst = worst.min(slope - (p - tol.exponent_slack));
                detail.push(format!("end {end}: slope {slope:.4}, predicted {p:.4}"));
            }
            Err(Error::Accuracy(m)) => return skipped(name, m),
            Err(e) => return errored(name, e),
        }
    }
    check(name, worst >= 0.0, Some(worst), Some(0.0), format!("margin over predicted - slack; {}", detail.join("; ")))
}
