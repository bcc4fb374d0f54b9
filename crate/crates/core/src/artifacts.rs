//! Run artifacts: `snapshots.csv` (t, s, x, y, w, k_g), `diagnostics.json`
//! (one object per output time) and `meta.json` (scenario and run summary).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{DiagnosticsRecord, RunRecord, Snapshot, StopReason, Trajectory};
use crate::scenario::Scenario;

pub const SNAPSHOTS: &str = "snapshots.csv";
pub const DIAGNOSTICS: &str = "diagnostics.json";
pub const META: &str = "meta.json";
pub const VALIDATION: &str = "validation.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub closed: bool,
    pub anchors: [Option<usize>; 2],
    pub base_length: f64,
    pub stop: StopReason,
    pub exit_code: i32,
    pub message: String,
    pub t_stop: f64,
    pub steps: usize,
    pub rejections: usize,
    pub snapshots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub scenario: Scenario,
    pub run: RunSummary,
}

#[derive(Serialize, Deserialize)]
struct Row {
    t: f64,
    s: f64,
    x: f64,
    y: f64,
    w: f64,
    k_g: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_snapshots(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    for s in snapshots {
        for i in 0..s.s.len() {
            w.serialize(Row { t: s.t, s: s.s[i], x: s.x[i], y: s.y[i], w: s.w[i], k_g: s.k_g[i] })
                .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows grouped into snapshots by consecutive equal `t`.
pub fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out: Vec<Snapshot> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let r = row.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if out.last().map_or(true, |s| s.t.to_bits() != r.t.to_bits()) {
            out.push(Snapshot { t: r.t, s: vec![], x: vec![], y: vec![], w: vec![], k_g: vec![] });
        }
        let s = out.last_mut().unwrap();
        s.s.push(r.s);
        s.x.push(r.x);
        s.y.push(r.y);
        s.w.push(r.w);
        s.k_g.push(r.k_g);
    }
    Ok(out)
}

pub fn summary(traj: &Trajectory) -> RunSummary {
    RunSummary {
        closed: traj.record.closed,
        anchors: traj.record.anchors,
        base_length: traj.record.base_length,
        stop: traj.stop,
        exit_code: traj.stop.exit_code(),
        message: traj.message.clone(),
        t_stop: traj.t_stop(),
        steps: traj.steps,
        rejections: traj.rejections,
        snapshots: traj.record.snapshots.len(),
    }
}

pub fn write_run(dir: &Path, scenario: &Scenario, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_snapshots(&dir.join(SNAPSHOTS), &traj.record.snapshots)?;
    write_json(&dir.join(DIAGNOSTICS), &traj.record.diagnostics)?;
    write_json(&dir.join(META), &Meta { scenario: scenario.clone(), run: summary(traj) })
}

pub fn read_run(dir: &Path) -> Result<(Meta, RunRecord)> {
    for f in [SNAPSHOTS, DIAGNOSTICS, META] {
        if !dir.join(f).is_file() {
            return Err(Error::Io(format!("missing artifact {}", dir.join(f).display())));
        }
    }
    let meta: Meta = read_json(&dir.join(META))?;
    let diagnostics: Vec<DiagnosticsRecord> = read_json(&dir.join(DIAGNOSTICS))?;
    let snapshots = read_snapshots(&dir.join(SNAPSHOTS))?;
    if snapshots.is_empty() {
        return Err(Error::Io("snapshots.csv holds no rows".into()));
    }
    let record = RunRecord {
        closed: meta.run.closed,
        anchors: meta.run.anchors,
        base_length: meta.run.base_length,
        snapshots,
        diagnostics,
    };
    Ok((meta, record))
}
