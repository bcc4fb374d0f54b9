use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dcsf::artifacts::{read_run, read_snapshots, write_snapshots, Meta, DIAGNOSTICS, META, SNAPSHOTS, VALIDATION};
use dcsf::cli::run_cli;
use dcsf::curve::TearDrop;
use dcsf::flow::{run, FlowConfig, FlowProblem, RunRecord};
use dcsf::metric::ConicalMetric;
use dcsf::suite::{Status, ValidationReport};
use dcsf::validators::distance_mp_check;
use tempfile::TempDir;

const TEAR: &str = r#"
name = "tear"
[metric]
singular_points = [{ x = 0.0, y = 0.0, beta = -0.5 }]
[curve]
fixture = "tear-drop"
[flow]
cells = 128
t_end = 0.01
output_every = 0.001
"#;

fn cli(args: &[&str]) -> i32 {
    let mut v = vec!["dcsf".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    run_cli(v)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn simulate(dir: &Path, text: &str) -> (PathBuf, i32) {
    let cfg = write(dir, "scenario.toml", text);
    let out = dir.join("run");
    let code = cli(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (out, code)
}

fn report(dir: &Path) -> ValidationReport {
    serde_json::from_str(&fs::read_to_string(dir.join(VALIDATION)).unwrap()).unwrap()
}

#[test]
fn simulate_writes_artifacts_and_validate_passes() {
    let tmp = TempDir::new().unwrap();
    let (out, code) = simulate(tmp.path(), TEAR);
    assert_eq!(code, 0);
    for f in [SNAPSHOTS, DIAGNOSTICS, META] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let (meta, record) = read_run(&out).unwrap();
    assert_eq!(meta.run.exit_code, 0);
    assert_eq!(record.snapshots.len(), meta.run.snapshots);
    assert_eq!(record.snapshots.len(), record.diagnostics.len());
    assert_eq!(cli(&["validate", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert!(r.passed);
    assert!(r.checks.iter().any(|c| c.name == "distance" && c.status == Status::Pass));
}

#[test]
fn corrupted_snapshots_fail_validation() {
    let tmp = TempDir::new().unwrap();
    let (out, code) = simulate(tmp.path(), TEAR);
    assert_eq!(code, 0);
    let path = out.join(SNAPSHOTS);
    let mut snaps = read_snapshots(&path).unwrap();
    for s in snaps.iter_mut().skip(1) {
        s.x.iter_mut().for_each(|x| *x *= 1.2);
        s.y.iter_mut().for_each(|y| *y *= 1.2);
    }
    write_snapshots(&path, &snaps).unwrap();
    assert_eq!(cli(&["validate", out.to_str().unwrap()]), 1);
    assert!(!report(&out).passed);
}

#[test]
fn missing_artifacts_are_a_config_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(cli(&["validate", tmp.path().to_str().unwrap()]), 2);
    let (out, _) = simulate(tmp.path(), TEAR);
    fs::remove_file(out.join(DIAGNOSTICS)).unwrap();
    assert_eq!(cli(&["validate", out.to_str().unwrap()]), 2);
}

#[test]
fn bad_configs_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(simulate(tmp.path(), "name = \"x\"\n[metric\n").1, 2);
    assert_eq!(simulate(tmp.path(), &TEAR.replace("cells = 128", "cells = 4")).1, 2);
    assert_eq!(cli(&["simulate"]), 2);
}

#[test]
fn curvature_blow_up_exits_with_its_stop_code() {
    let tmp = TempDir::new().unwrap();
    let (out, code) = simulate(tmp.path(), &TEAR.replace("t_end = 0.01", "t_end = 0.01\nk_max = 1.0"));
    assert_eq!(code, 3);
    let meta: Meta = serde_json::from_str(&fs::read_to_string(out.join(META)).unwrap()).unwrap();
    assert_eq!(meta.run.exit_code, 3);
}

#[test]
fn checks_can_be_disabled_from_a_tolerance_file() {
    let tmp = TempDir::new().unwrap();
    let (out, _) = simulate(tmp.path(), TEAR);
    let tol = write(tmp.path(), "tol.toml", "[checks]\nasymptotics = false\narea_rate = false\n[tolerances]\ndistance = 1e-2\n");
    assert_eq!(cli(&["validate", out.to_str().unwrap(), "--tol-file", tol.to_str().unwrap()]), 0);
    let r = report(&out);
    let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    assert!(!names.contains(&"asymptotics") && !names.contains(&"area-rate"));
    let dist = r.checks.iter().find(|c| c.name == "distance").unwrap();
    assert_eq!(dist.limit, Some(1e-2));
}

#[test]
fn runs_are_deterministic_and_meta_replays() {
    let tmp = TempDir::new().unwrap();
    let (out, _) = simulate(tmp.path(), TEAR);
    let replay = tmp.path().join("replay");
    let meta = out.join(META);
    assert_eq!(cli(&["simulate", "--config", meta.to_str().unwrap(), "--out", replay.to_str().unwrap(), "--seedless"]), 0);
    for f in [SNAPSHOTS, DIAGNOSTICS, META] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(replay.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.toml", &format!("{TEAR}[sweep]\nbeta = []\n"));
    let out = tmp.path().join("sweep");
    assert_eq!(cli(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let text = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("index,beta,cells"));
}

#[test]
fn sweep_runs_every_cell() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.toml", &format!("{TEAR}[sweep]\nbeta = [-0.5, -0.3]\ncells = [64, 96]\n"));
    let out = tmp.path().join("sweep");
    assert_eq!(cli(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let mut rdr = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for i in 0..4 {
        assert!(out.join(format!("cell_{i:04}")).join(META).is_file());
    }
}

#[test]
fn geodesic_and_sector_compare_write_outputs() {
    let tmp = TempDir::new().unwrap();
    let g = tmp.path().join("geo");
    assert_eq!(cli(&["geodesic", "--beta", "-0.5", "--m2", "0.2", "--out", g.to_str().unwrap()]), 0);
    assert!(g.join("geodesic.csv").is_file() && g.join("geodesic.json").is_file());
    let cfg = write(tmp.path(), "s.toml", TEAR);
    let s = tmp.path().join("sector");
    assert_eq!(cli(&["sector-compare", "--config", cfg.to_str().unwrap(), "--out", s.to_str().unwrap(), "--t", "0.01"]), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(s.join("sector.json")).unwrap()).unwrap();
    assert!(v["relative"].as_f64().unwrap() < 0.02);
}

#[test]
fn distance_check_catches_a_wrong_evolution() {
    let m = ConicalMetric::flat_cone(-0.5).unwrap();
    let cfg = FlowConfig { cells: 64, t_end: 0.01, ..FlowConfig::default() };
    let curve = Arc::new(TearDrop::default());
    let traj = run(&m, curve.clone(), &cfg).unwrap();
    assert!(distance_mp_check(&m, &traj.record).unwrap().worst <= 1e-3);
    // the same times with the displacement reversed and doubled
    let p = FlowProblem::new(&m, curve, &cfg).unwrap();
    let snapshots = traj
        .states
        .iter()
        .map(|s| {
            let mut bad = s.clone();
            bad.u.iter_mut().for_each(|u| *u *= -2.0);
            p.snapshot(&bad, &p.evaluate(&bad.u).unwrap())
        })
        .collect();
    let record = RunRecord { snapshots, ..traj.record.clone() };
    assert!(distance_mp_check(&m, &record).unwrap().worst > 1e-3);
}
