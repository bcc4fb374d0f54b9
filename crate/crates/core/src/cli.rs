//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{self, write_json};
use crate::error::{Error, Result};
use crate::flow;
use crate::geodesics::{geodesic_residual, geodesic_residual_analytic, GeodesicFamilyParams};
use crate::scenario::{Scenario, SweepCell, ValidationSpec};
use crate::sector::{hausdorff, sector_compare};
use crate::suite::run_suite;
use crate::validators::{asymptotic_exponent, predicted_exponent, tmax_bound, AsymptoticPrediction};
use crate::vec2::Vec2;

pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "dcsf", version, about = "Degenerate curve shortening flow on conical surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Scenario file (TOML, or JSON such as a previous meta.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the number of grid cells.
    #[arg(long)]
    pub cells: Option<usize>,
    /// Override the final time.
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Runs are always deterministic; accepted for compatibility.
    #[arg(long)]
    pub seedless: bool,
    /// TOML file with `[checks]` and `[tolerances]` tables.
    #[arg(long = "tol-file")]
    pub tol_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the flow and write snapshots.csv, diagnostics.json and meta.json.
    Simulate(Common),
    /// Run the validators on an artifact directory and write validation.json.
    Validate {
        /// Artifact directory (defaults to --out).
        dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Export a closed-form geodesic of the flat cone with its residuals.
    Geodesic {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        m1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        m2: f64,
        /// Fraction of the admissible angle interval to sample.
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the flow on a flat cone with planar curve shortening in the sector.
    SectorCompare {
        #[command(flatten)]
        common: Common,
        /// Comparison time (default: a tenth of the maximal-time bound).
        #[arg(long)]
        t: Option<f64>,
        /// Nodes of the planar polyline (default: twice the cells).
        #[arg(long = "planar-nodes")]
        planar_nodes: Option<usize>,
        /// Shared output times.
        #[arg(long, default_value_t = 5)]
        outputs: usize,
    },
    /// Run a parameter grid from the scenario's `[sweep]` table.
    Sweep(Common),
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn load_scenario(common: &Common) -> Result<Scenario> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut s = Scenario::load(path)?;
    if let Some(c) = common.cells {
        s.flow.cells = c;
    }
    if let Some(t) = common.t_end {
        s.flow.t_end = t;
    }
    if let Some(tf) = &common.tol_file {
        s.validation = load_tolerances(tf)?;
    }
    s.validate()?;
    Ok(s)
}

fn load_tolerances(path: &Path) -> Result<ValidationSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let v: ValidationSpec = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    v.tolerances.validate()?;
    Ok(v)
}

fn out_dir(common: &Common, scenario: Option<&Scenario>) -> Result<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| scenario.and_then(|s| s.output.clone()))
        .ok_or_else(|| Error::Config("no output directory (--out or `output` in the scenario)".into()))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate(common) => simulate(&common),
        Command::Validate { dir, common } => validate(dir, &common),
        Command::Geodesic { beta, m1, m2, fraction, points, out } => geodesic(beta, m1, m2, fraction, points, out),
        Command::SectorCompare { common, t, planar_nodes, outputs } => sector(&common, t, planar_nodes, outputs),
        Command::Sweep(common) => sweep(&common),
    }
}

fn simulate(common: &Common) -> Result<i32> {
    let scenario = load_scenario(common)?;
    let dir = out_dir(common, Some(&scenario))?;
    let base = scenario.curve.build()?;
    let traj = flow::run(&scenario.metric, base, &scenario.flow).map_err(config_error)?;
    artifacts::write_run(&dir, &scenario, &traj)?;
    println!("{:?} at t = {} after {} steps{}", traj.stop, traj.t_stop(), traj.steps, if traj.message.is_empty() { String::new() } else { format!(": {}", traj.message) });
    Ok(traj.stop.exit_code())
}

fn validate(dir: Option<PathBuf>, common: &Common) -> Result<i32> {
    let dir = dir.or_else(|| common.out.clone()).ok_or_else(|| Error::Config("no artifact directory given".into()))?;
    let (meta, record) = artifacts::read_run(&dir).map_err(config_error)?;
    let mut spec = meta.scenario.validation;
    if let Some(tf) = &common.tol_file {
        spec = load_tolerances(tf)?;
    }
    let base = meta.scenario.curve.build()?;
    let report = run_suite(&meta.scenario.metric, base.as_ref(), &record, &spec);
    write_json(&dir.join(artifacts::VALIDATION), &report)?;
    for c in &report.checks {
        println!("{:<14} {:?} {}", c.name, c.status, c.detail);
    }
    Ok(if report.passed { 0 } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct GeodesicReport {
    params: GeodesicFamilyParams,
    fraction: f64,
    points: usize,
    residual_analytic: f64,
    residual_spline: f64,
}

fn geodesic(beta: f64, m1: f64, m2: f64, fraction: f64, points: usize, out: Option<PathBuf>) -> Result<i32> {
    let dir = out.ok_or_else(|| Error::Config("--out is required".into()))?;
    if !(fraction > 0.0 && fraction < 1.0) || points < 8 {
        return Err(Error::Config("need 0 < fraction < 1 and at least 8 points".into()));
    }
    let params = GeodesicFamilyParams::new(beta, m1, m2).map_err(config_error)?;
    let samples = params.samples(fraction, points);
    let phis: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let report = GeodesicReport {
        params,
        fraction,
        points,
        residual_analytic: geodesic_residual_analytic(&params, &phis)?,
        residual_spline: geodesic_residual(beta, &samples)?,
    };
    std::fs::create_dir_all(&dir)?;
    let mut w = csv::Writer::from_path(dir.join("geodesic.csv")).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(["phi", "r", "x", "y"]).map_err(|e| Error::Io(e.to_string()))?;
    for (phi, r) in &samples {
        let p = Vec2::polar(*r, *phi);
        w.write_record([phi, r, &p.x, &p.y].map(|v| v.to_string())).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    write_json(&dir.join("geodesic.json"), &report)?;
    println!("residual analytic {:e}, spline {:e}", report.residual_analytic, report.residual_spline);
    Ok(0)
}

fn sector(common: &Common, t: Option<f64>, planar_nodes: Option<usize>, outputs: usize) -> Result<i32> {
    let scenario = load_scenario(common)?;
    let dir = out_dir(common, Some(&scenario))?;
    let pts = scenario.metric.singular_points();
    if pts.len() != 1 || pts[0].position() != Vec2::ZERO || !scenario.metric.h().is_zero() {
        return Err(Error::Config("sector comparison needs a single flat cone point at the origin".into()));
    }
    let base = scenario.curve.build()?;
    let t = match t {
        Some(t) => t,
        None => 0.1 * tmax_bound(&scenario.metric, base.as_ref())?,
    };
    let nodes = planar_nodes.unwrap_or(2 * scenario.flow.cells);
    let report = sector_compare(pts[0].beta, base, &scenario.flow, nodes, t, outputs).map_err(config_error)?;
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("sector.json"), &report)?;
    println!("Hausdorff {:e} = {:.3e} of the diameter at t = {}", report.hausdorff, report.relative, report.t);
    Ok(0)
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    beta: Option<f64>,
    cells: usize,
    scale: f64,
    stop: String,
    exit_code: Option<i32>,
    t_stop: Option<f64>,
    tmax_bound: Option<f64>,
    within_bound: Option<bool>,
    slope: Option<f64>,
    predicted_exponent: Option<f64>,
    diff_to_finest: Option<f64>,
    error: String,
}

struct CellOutcome {
    row: SweepRow,
    last: Option<(f64, Vec<Vec2>)>,
}

fn sweep_cell(template: &Scenario, index: usize, cell: SweepCell, dir: &Path) -> CellOutcome {
    let mut row = SweepRow {
        index,
        beta: cell.beta,
        cells: cell.cells,
        scale: cell.scale,
        stop: String::new(),
        exit_code: None,
        t_stop: None,
        tmax_bound: None,
        within_bound: None,
        slope: None,
        predicted_exponent: None,
        diff_to_finest: None,
        error: String::new(),
    };
    let mut run = || -> Result<(f64, Vec<Vec2>)> {
        let mut s = match cell.beta {
            Some(b) => template.with_beta(b)?,
            None => template.clone(),
        };
        if cell.scale != 1.0 {
            s.curve = s.curve.scaled(cell.scale)?;
        }
        s.flow.cells = cell.cells;
        s.sweep = None;
        s.validate()?;
        let base = s.curve.build()?;
        let traj = flow::run(&s.metric, base.clone(), &s.flow)?;
        artifacts::write_run(&dir.join(format!("cell_{index:04}")), &s, &traj)?;
        row.stop = format!("{:?}", traj.stop);
        row.exit_code = Some(traj.stop.exit_code());
        row.t_stop = Some(traj.t_stop());
        let b = tmax_bound(&s.metric, base.as_ref())?;
        row.tmax_bound = Some(b);
        row.within_bound = Some(traj.t_stop() <= b);
        if let (Some(a0), Some(a1)) = (traj.record.anchors[0], traj.record.anchors[1]) {
            let (b0, b1) = (s.metric.singular_points()[a0].beta, s.metric.singular_points()[a1].beta);
            let pred = AsymptoticPrediction::smooth(b0.min(b1), b0.max(b1));
            row.predicted_exponent = predicted_exponent(&pred, if b0 <= b1 { 0 } else { 1 }).ok();
            let w = s.validation.tolerances.exponent_window;
            row.slope = asymptotic_exponent(&traj.record, 0, (w[0], w[1]), 0.5 * traj.t_stop()).ok();
        }
        let last = traj.snapshots().last().expect("initial snapshot");
        Ok((last.t, last.points()))
    };
    match run() {
        Ok(last) => CellOutcome { row, last: Some(last) },
        Err(e) => {
            row.error = e.to_string();
            CellOutcome { row, last: None }
        }
    }
}

fn sweep(common: &Common) -> Result<i32> {
    let scenario = load_scenario(common)?;
    let dir = out_dir(common, Some(&scenario))?;
    let grid = scenario.sweep.clone().unwrap_or_default().cells(&scenario);
    std::fs::create_dir_all(&dir)?;
    let mut outcomes: Vec<CellOutcome> =
        grid.par_iter().enumerate().map(|(i, c)| sweep_cell(&scenario, i, *c, &dir)).collect();
    // differences to the finest resolution with the same beta and scale at the same final time
    for i in 0..outcomes.len() {
        let key = (outcomes[i].row.beta, outcomes[i].row.scale);
        let finest = (0..outcomes.len())
            .filter(|&j| (outcomes[j].row.beta, outcomes[j].row.scale) == key && outcomes[j].last.is_some())
            .max_by_key(|&j| outcomes[j].row.cells);
        if let (Some(f), Some((t, pts))) = (finest, &outcomes[i].last) {
            let (tf, pf) = outcomes[f].last.as_ref().unwrap();
            if f != i && t == tf {
                outcomes[i].row.diff_to_finest = Some(hausdorff(pts, pf));
            }
        }
    }
    let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(|e| Error::Io(e.to_string()))?;
    if outcomes.is_empty() {
        w.write_record([
            "index", "beta", "cells", "scale", "stop", "exit_code", "t_stop", "tmax_bound", "within_bound", "slope",
            "predicted_exponent", "diff_to_finest", "error",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    for o in &outcomes {
        w.serialize(&o.row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    println!("{} sweep cells written to {}", outcomes.len(), dir.join("summary.csv").display());
    Ok(0)
}
