//! Acceptance harness: one line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use dcsf::curve::{curvature, geodesic_curvature, rho, tear_drop_fixture, AnalyticCurve, ParametricCurve, Segment, TearDrop};
use dcsf::flow::{run, FlowConfig, FlowProblem, StopReason, Trajectory};
use dcsf::geodesics::{geodesic_residual, geodesic_residual_analytic, GeodesicFamilyParams};
use dcsf::metric::{ConePoint, ConicalMetric, Polynomial2};
use dcsf::sector::{
    eight_report, figure_eight, isometry_length_residual, planar_csf, polygon_area, sector_compare, FigureEight,
    PlanarCsfConfig, PlanarStop, SectorTearDrop,
};
use dcsf::validators::{
    area_rate_check, asymptotic_exponent, boundary_geodesic_integral, convexity_monitor, distance_mp_check,
    endpoints_pinned, evolution_residuals, gauss_bonnet_report, predicted_exponent, tmax_bound, AsymptoticPrediction,
    EvolutionResidual, RegionSpec,
};
use dcsf::curve::SampledCurve;
use dcsf::Vec2;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const BETAS: [f64; 3] = [-0.9, -0.5, -0.2];

/// Tear-drop runs on the cone of order -1/2 shared by several criteria.
struct Runs {
    metric: ConicalMetric,
    by_cells: Vec<(usize, Trajectory)>,
}

impl Runs {
    fn new() -> Result<Self, String> {
        let metric = ConicalMetric::flat_cone(-0.5).map_err(e2s)?;
        let mut by_cells = Vec::new();
        for cells in [128, 256, 512] {
            let cfg = FlowConfig { cells, t_end: 0.05, output_every: 1e-3, ..FlowConfig::default() };
            by_cells.push((cells, run(&metric, Arc::new(TearDrop::default()), &cfg).map_err(e2s)?));
        }
        Ok(Runs { metric, by_cells })
    }

    fn get(&self, cells: usize) -> &Trajectory {
        &self.by_cells.iter().find(|r| r.0 == cells).expect("run").1
    }

    fn mid_residuals(&self) -> Result<Vec<(usize, EvolutionResidual)>, String> {
        self.by_cells
            .iter()
            .map(|(c, t)| {
                let res = evolution_residuals(&self.metric, &t.record).map_err(e2s)?;
                let mid = 0.5 * t.t_stop();
                let r = res.into_iter().min_by(|a, b| (a.t - mid).abs().total_cmp(&(b.t - mid).abs())).ok_or("no residuals")?;
                Ok((*c, r))
            })
            .collect()
    }
}

fn c1() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for beta in BETAS {
        let p = GeodesicFamilyParams::new(beta, 1.3, 0.1).map_err(e2s)?;
        let samples = p.samples(0.25, 200);
        let phis: Vec<f64> = samples.iter().map(|s| s.0).collect();
        worst.0 = worst.0.max(geodesic_residual_analytic(&p, &phis).map_err(e2s)?);
        worst.1 = worst.1.max(geodesic_residual(beta, &samples).map_err(e2s)?);
    }
    ensure(worst.0 < 1e-8 && worst.1 < 1e-4, format!("analytic {:.2e} < 1e-8, spline {:.2e} < 1e-4", worst.0, worst.1))
}

fn c2() -> Outcome {
    let mut worst: f64 = 0.0;
    for beta in BETAS {
        let m = ConicalMetric::flat_cone(beta).map_err(e2s)?;
        for k in 0..16 {
            let dir = Vec2::polar(1.0, 0.1 + 2.0 * PI * k as f64 / 16.0);
            for ray in [Segment { a: Vec2::ZERO, b: 3.0 * dir }, Segment { a: 0.2 * dir, b: 4.0 * dir }] {
                let (a, b) = ray.domain();
                for i in 0..=50 {
                    let t = a + (b - a) * i as f64 / 50.0;
                    if m.singular_at(ray.jet(t).pos).is_some() {
                        continue;
                    }
                    worst = worst.max(geodesic_curvature(&m, &ray, t).map_err(e2s)?.abs());
                }
            }
        }
    }
    ensure(worst < 1e-10, format!("max |k_g| on rays {worst:.2e} < 1e-10"))
}

fn c3() -> Outcome {
    let c = TearDrop::default();
    let (mut wk, mut wr) = (0.0f64, 0.0f64);
    for i in 1..1000 {
        let s = PI * i as f64 / 1000.0;
        let k = curvature(&c, s).map_err(e2s)?;
        wk = wk.max((k - 3.0 * c.jet(s).pos.norm()).abs());
        wr = wr.max((k + 3.0 * rho(&c, s, Vec2::ZERO).map_err(e2s)?).abs());
    }
    let sp = tear_drop_fixture(200).map_err(e2s)?.spline().map_err(e2s)?;
    let k0 = curvature(&sp, 0.0).map_err(e2s)?;
    let (j, off) = sp.jet_near_end(0, 1e-6);
    let r0 = off.dot(j.normal()) / off.norm2();
    let lim = (r0 + 0.5 * k0).abs();
    ensure(
        wk < 1e-6 && wr < 1e-6 && lim < 1e-3,
        format!("|k-3|γ|| {wk:.2e}, |k+3ρ| {wr:.2e} < 1e-6; spline |ρ(0+)+k(0)/2| {lim:.2e} < 1e-3"),
    )
}

fn c4() -> Outcome {
    let mut analytic: f64 = 0.0;
    let mut excised: f64 = 0.0;
    for beta in BETAS {
        let m = ConicalMetric::flat_cone(beta).map_err(e2s)?;
        for (centre, r) in [(Vec2::ZERO, 0.7), (Vec2::new(0.3, -0.2), 1.1)] {
            let disk = RegionSpec::new(vec![Arc::new(AnalyticCurve::circle(centre, r))], 1).map_err(e2s)?;
            let v = boundary_geodesic_integral(&m, &disk).map_err(e2s)? / (2.0 * PI);
            analytic = analytic.max((v - (1.0 + beta)).abs());
        }
        // disk with the cone point on its boundary: smooth vertex, exterior angle 0
        let through = RegionSpec::new(vec![Arc::new(AnalyticCurve::arc(Vec2::new(0.8, 0.0), 0.8, PI, 3.0 * PI))], 1).map_err(e2s)?;
        let rep = gauss_bonnet_report(&m, &through).map_err(e2s)?;
        excised = excised.max((rep.boundary_term - (1.0 + 0.5 * beta)).abs()).max(rep.residual);
    }
    let m = ConicalMetric::flat_cone(-0.5).map_err(e2s)?;
    let tear = RegionSpec::new(vec![Arc::new(TearDrop::default())], 1).map_err(e2s)?;
    let rep = gauss_bonnet_report(&m, &tear).map_err(e2s)?;
    excised = excised.max((rep.boundary_term - 0.625).abs()).max(rep.residual);
    ensure(
        analytic < 1e-6 && excised < 1e-3,
        format!("cone disks |(1/2π)∮k_g - (1+β)| {analytic:.2e} < 1e-6; boundary-vertex regions {excised:.2e} < 1e-3"),
    )
}

fn c5() -> Outcome {
    let mut worst_t: f64 = 0.0;
    for radius in [1.0, 2.0] {
        let pts: Vec<Vec2> = (0..200).map(|i| Vec2::polar(radius, 2.0 * PI * i as f64 / 200.0)).collect();
        let cfg = PlanarCsfConfig { t_end: radius * radius, ..PlanarCsfConfig::default() };
        let r = planar_csf(&pts, true, &cfg, &[]).map_err(e2s)?;
        if r.stop != PlanarStop::Collapse {
            return Err(format!("circle of radius {radius} did not collapse: {:?}", r.stop));
        }
        let exact = 0.5 * radius * radius;
        worst_t = worst_t.max((r.t_stop - exact).abs() / exact);
    }
    let ell = AnalyticCurve::ellipse(Vec2::new(0.2, -0.1), 1.5, 0.8);
    let pts: Vec<Vec2> = (0..200).map(|i| ell.jet(2.0 * PI * i as f64 / 200.0).pos).collect();
    let cfg = PlanarCsfConfig { t_end: 0.2, ..PlanarCsfConfig::default() };
    let r = planar_csf(&pts, true, &cfg, &[0.1, 0.2]).map_err(e2s)?;
    let a: Vec<f64> = r.frames.iter().map(|f| polygon_area(&f.nodes)).collect();
    let rate = (a[2] - a[0]) / 0.2;
    let rate_err = (rate + 2.0 * PI).abs() / (2.0 * PI);
    ensure(
        worst_t < 0.02 && rate_err < 0.02,
        format!("collapse time rel. error {worst_t:.2e} < 2%; ellipse area rate {rate:.4} vs -2π, rel. {rate_err:.2e} < 2%"),
    )
}

fn c6(runs: &Runs) -> Outcome {
    let traj = runs.get(256);
    let rec = &traj.record;
    let m = &runs.metric;
    let pinned = endpoints_pinned(m, rec);
    let lengths: Vec<f64> = rec.diagnostics.iter().map(|d| d.length).collect();
    let strictly = lengths.windows(2).all(|w| w[1] < w[0]);
    let dist = distance_mp_check(m, rec).map_err(e2s)?;
    let conv = convexity_monitor(rec);
    let min_kg = conv.series.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let bound = tmax_bound(m, &TearDrop::default()).map_err(e2s)?;
    let ok = traj.stop == StopReason::Horizon && pinned && strictly && dist.worst < 1e-3 && min_kg >= -1e-4 && traj.t_stop() <= bound;
    ensure(
        ok,
        format!(
            "stop {:?}; pinned {pinned}; L strictly decreasing {strictly}; distance violation {:.2e} < 1e-3; min k_g {min_kg:.2e} ≥ -1e-4; t_stop {} ≤ {bound}",
            traj.stop,
            dist.worst.max(0.0),
            traj.t_stop()
        ),
    )
}

fn c7(runs: &Runs) -> Outcome {
    let res = runs.mid_residuals()?;
    let v: Vec<f64> = res.iter().map(|r| r.1.normal_speed).collect();
    let decreasing = v.windows(2).all(|w| w[1] < w[0]);
    let at256 = res.iter().find(|r| r.0 == 256).map(|r| r.1.normal_speed).unwrap_or(f64::NAN);
    ensure(
        v.iter().all(|x| *x < 1e-3) && decreasing,
        format!("mid-run normal-speed residual for 128/256/512 cells: {:.2e} {:.2e} {:.2e} (< 1e-3, decreasing); 256 cells {at256:.2e}", v[0], v[1], v[2]),
    )
}

fn c8() -> Outcome {
    let mut worst: f64 = 0.0;
    for beta in BETAS {
        let m = ConicalMetric::flat_cone(beta).map_err(e2s)?;
        let p = FlowProblem::new(&m, Arc::new(TearDrop::default()), &FlowConfig::default()).map_err(e2s)?;
        let state = p.initial_state();
        let u_t = p.rhs(&state).map_err(e2s)?;
        for (cell, ut) in p.cells().iter().zip(&u_t) {
            let r = match cell.frame.offset {
                Some((_, off)) => off.norm(),
                None => cell.frame.pos.norm(),
            };
            // λ^{-1/2} k_g of the tear drop on the cone
            let exact = r.powf(1.0 - 2.0 * beta) * (beta + 3.0);
            worst = worst.max((cell.d[0] * ut - exact).abs());
        }
    }
    ensure(worst < 1e-8, format!("max |w_t - λ^(-1/2) k_g| at w = 0: {worst:.2e} < 1e-8"))
}

fn c9(runs: &Runs) -> Outcome {
    let pts = area_rate_check(&runs.metric, &runs.get(256).record).map_err(e2s)?;
    let loop_err = pts.iter().map(|p| p.relative).fold(0.0, f64::max);
    let beta = -0.5;
    let m = ConicalMetric::flat_cone(beta).map_err(e2s)?;
    let cfg = FlowConfig { cells: 256, t_end: 0.05, output_every: 0.005, ..FlowConfig::default() };
    let circ = run(&m, Arc::new(AnalyticCurve::circle(Vec2::new(0.15, 0.1), 1.0)), &cfg).map_err(e2s)?;
    if circ.stop != StopReason::Horizon {
        return Err(format!("circle run stopped early: {:?} {}", circ.stop, circ.message));
    }
    let cpts = area_rate_check(&m, &circ.record).map_err(e2s)?;
    let circ_err = cpts.iter().map(|p| p.relative).fold(0.0, f64::max);
    let predicted = cpts[0].predicted;
    ensure(
        loop_err < 0.05 && circ_err < 0.05 && (predicted + 2.0 * PI * (1.0 + beta)).abs() < 1e-12,
        format!("loop through the cone: max rel. {loop_err:.6e} < 5%; circle around the cone (rate -2π(1+β) = {predicted:.4}): max rel. {circ_err:.6e} < 5%"),
    )
}

fn c10() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for beta in BETAS {
        let m = ConicalMetric::flat_cone(beta).map_err(e2s)?;
        let cfg = FlowConfig { cells: 256, t_end: 0.05, output_every: 1e-3, ..FlowConfig::default() };
        let traj = run(&m, Arc::new(TearDrop::default()), &cfg).map_err(e2s)?;
        let pred = predicted_exponent(&AsymptoticPrediction::smooth(beta, beta), 0).map_err(e2s)?;
        for end in 0..2 {
            let slope = asymptotic_exponent(&traj.record, end, (1e-3, 1e-1), 0.5 * traj.t_stop()).map_err(e2s)?;
            ok &= slope >= pred - 0.15;
            if end == 0 {
                lines.push(format!("β={beta}: slope {slope:.3} ≥ {pred:.3} - 0.15"));
            }
        }
    }
    ensure(ok, lines.join("; "))
}

fn c11() -> Outcome {
    let beta = -0.5;
    let m = ConicalMetric::flat_cone(beta).map_err(e2s)?;
    let base: Arc<dyn ParametricCurve> = Arc::new(TearDrop::default());
    let t = 0.1 * tmax_bound(&m, base.as_ref()).map_err(e2s)?;
    let mut rel = Vec::new();
    let mut iso: f64 = 0.0;
    for (cells, nodes) in [(128, 256), (256, 512)] {
        let cfg = FlowConfig { cells, ..FlowConfig::default() };
        let r = sector_compare(beta, base.clone(), &cfg, nodes, t, 5).map_err(e2s)?;
        iso = iso.max(r.isometry_residual);
        rel.push(r.relative);
        if r.distances[0].1 > 1e-10 {
            return Err(format!("initial distance {:.2e}", r.distances[0].1));
        }
    }
    let arc = Arc::new(AnalyticCurve::arc(Vec2::new(-1.0, 0.3), 0.5, 0.2, 5.0));
    for b in BETAS {
        iso = iso.max(isometry_length_residual(b, arc.clone(), 0.0).map_err(e2s)?);
    }
    let change = (rel[1] - rel[0]).abs();
    ensure(
        iso < 1e-6 && rel[1] <= 0.02 && change <= 0.02,
        format!("isometry residual {iso:.2e} < 1e-6; Hausdorff/diameter at t = {t}: {:.2e} (coarse {:.2e}) ≤ 2%", rel[1], rel[0]),
    )
}

fn c12(runs: &Runs) -> Outcome {
    let m = ConicalMetric::euclidean();
    let cfg = FlowConfig { cells: 128, t_end: 0.2, output_every: 0.01, ..FlowConfig::default() };
    let circ = run(&m, Arc::new(AnalyticCurve::circle(Vec2::new(0.3, -0.4), 1.0)), &cfg).map_err(e2s)?;
    let res = evolution_residuals(&m, &circ.record).map_err(e2s)?;
    let circle = res.iter().map(|r| r.curvature).fold(0.0, f64::max);
    let mid = runs.mid_residuals()?;
    let dec = |f: fn(&EvolutionResidual) -> f64| mid.windows(2).all(|w| f(&w[1].1) < f(&w[0].1));
    let (a, b, c) = (dec(|r| r.speed), dec(|r| r.length), dec(|r| r.curvature));
    let fmt = |f: fn(&EvolutionResidual) -> f64| mid.iter().map(|r| format!("{:.1e}", f(&r.1))).collect::<Vec<_>>().join("/");
    ensure(
        circle < 1e-3 && a && b && c,
        format!(
            "circle max |k_t - k_zz - k³| {circle:.2e} < 1e-3; tear-drop mid-run residuals (128/256/512) speed {} length {} curvature {}",
            fmt(|r| r.speed),
            fmt(|r| r.length),
            fmt(|r| r.curvature)
        ),
    )
}

fn c13() -> Outcome {
    let eight = FigureEight::new(Arc::new(SectorTearDrop)).map_err(e2s)?;
    let rep = eight_report(&eight, 12).map_err(e2s)?;
    let kmax = rep.junction_curvature.iter().flatten().fold(0.0f64, |a, k| a.max(k.abs()));
    let mismatch = rep.tangent_mismatch[0].max(rep.tangent_mismatch[1]);
    let lobe = SampledCurve::sample(&SectorTearDrop, 201, [None, None]).map_err(e2s)?;
    let discrete = figure_eight(&lobe).map_err(e2s)?;
    let nodes = &discrete.nodes()[..discrete.len() - 1];
    let node_sym = nodes.iter().all(|p| nodes.contains(&-*p));
    let half = nodes.len() / 2;
    let cfg = PlanarCsfConfig { t_end: 2.0, ..PlanarCsfConfig::default() };
    let times: Vec<f64> = (1..400).map(|k| 0.005 * k as f64).collect();
    let r = planar_csf(nodes, true, &cfg, &times).map_err(e2s)?;
    let areas: Vec<f64> = r.frames.iter().map(|f| polygon_area(&f.nodes[..=half])).collect();
    let monotone = areas.windows(2).all(|w| w[1] < w[0]);
    let centre = r.frames.iter().map(|f| f.nodes[0].norm().max(f.nodes[half].norm())).fold(0.0, f64::max);
    ensure(
        rep.symmetry_defect == 0.0 && node_sym && kmax < 1e-10 && mismatch < 1e-6 && monotone,
        format!(
            "symmetry defect {} (nodes {node_sym}); junction |k| {kmax:.1e}, tangent mismatch {mismatch:.1e} < 1e-6; lobe area {:.4} → {:.2e} monotone over {} frames until {:?} at t = {:.4}; crossing drift {centre:.1e}",
            rep.symmetry_defect,
            areas[0],
            areas[areas.len() - 1],
            areas.len(),
            r.stop,
            r.t_stop
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = Runs::new();
    let with_runs = |f: fn(&Runs) -> Outcome| -> Outcome {
        match &runs {
            Ok(r) => f(r),
            Err(e) => Err(format!("shared runs failed: {e}")),
        }
    };
    let _ = Polynomial2::zero();
    let _ = ConePoint::new(Vec2::ZERO, -0.5);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("C1 geodesic family residual", Box::new(c1)),
        ("C2 rays are geodesics", Box::new(c2)),
        ("C3 tear-drop identities", Box::new(c3)),
        ("C4 singular Gauss-Bonnet", Box::new(c4)),
        ("C5 reference planar CSF", Box::new(c5)),
        ("C6 structural suite", Box::new(move || with_runs(c6))),
        ("C7 normal-speed identity", Box::new(move || with_runs(c7))),
        ("C8 w = 0 consistency", Box::new(c8)),
        ("C9 area law", Box::new(move || with_runs(c9))),
        ("C10 curvature asymptotics", Box::new(c10)),
        ("C11 sector cross-validation", Box::new(c11)),
        ("C12 evolution-equation residuals", Box::new(move || with_runs(c12))),
        ("C13 figure-eight construction", Box::new(c13)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let t0 = Instant::now();
        let out = f();
        let secs = t0.elapsed().as_secs_f64();
        match out {
            Ok(m) => println!("PASS  {name}: {m} [{secs:.1}s]"),
            Err(m) => {
                failed += 1;
                println!("FAIL  {name}: {m} [{secs:.1}s]");
            }
        }
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
