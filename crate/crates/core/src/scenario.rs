//! Scenario files: metric, base curve, flow settings, validation switches
//! and tolerances, and optional sweep grids.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{AnalyticCurve, ParametricCurve, SampledCurve, Segment, SplineCurve, TearDrop};
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::metric::ConicalMetric;
use crate::vec2::Vec2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fixture", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveSpec {
    TearDrop {
        #[serde(default = "one")]
        scale: f64,
    },
    Circle {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    Segment {
        a: [f64; 2],
        b: [f64; 2],
    },
    /// Points from a CSV file with columns `x,y`; a closed curve repeats
    /// its first point at the end.
    Csv {
        path: PathBuf,
        #[serde(default)]
        closed: bool,
    },
}

fn one() -> f64 {
    1.0
}

fn positive(v: f64, what: &str) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("{what} must be positive")));
    }
    Ok(())
}

impl CurveSpec {
    pub fn build(&self) -> Result<Arc<dyn ParametricCurve>> {
        Ok(match self {
            CurveSpec::TearDrop { scale } => {
                positive(*scale, "tear-drop scale")?;
                Arc::new(TearDrop { scale: *scale })
            }
            CurveSpec::Circle { center, radius } => {
                positive(*radius, "circle radius")?;
                Arc::new(AnalyticCurve::circle(Vec2::from(*center), *radius))
            }
            CurveSpec::Ellipse { center, a, b } => {
                positive(*a, "ellipse semi-axis a")?;
                positive(*b, "ellipse semi-axis b")?;
                Arc::new(AnalyticCurve::ellipse(Vec2::from(*center), *a, *b))
            }
            CurveSpec::Segment { a, b } => {
                if a == b {
                    return Err(Error::Config("segment end points coincide".into()));
                }
                Arc::new(Segment { a: Vec2::from(*a), b: Vec2::from(*b) })
            }
            CurveSpec::Csv { path, closed } => {
                let pts = read_points(path)?;
                let c = SampledCurve::from_points(pts, *closed, [None, None]).map_err(|e| Error::Config(e.to_string()))?;
                Arc::new(SplineCurve::new(&c).map_err(|e| Error::Config(e.to_string()))?)
            }
        })
    }

    /// Multiplies the fixture size by `factor` (tear-drop scale, radii, semi-axes).
    pub fn scaled(&self, factor: f64) -> Result<CurveSpec> {
        Ok(match self.clone() {
            CurveSpec::TearDrop { scale } => CurveSpec::TearDrop { scale: scale * factor },
            CurveSpec::Circle { center, radius } => CurveSpec::Circle { center, radius: radius * factor },
            CurveSpec::Ellipse { center, a, b } => CurveSpec::Ellipse { center, a: a * factor, b: b * factor },
            _ => return Err(Error::Config("only tear-drop, circle and ellipse fixtures can be scaled".into())),
        })
    }

    fn resolve(&mut self, base: &Path) {
        if let CurveSpec::Csv { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

fn read_points(path: &Path) -> Result<Vec<Vec2>> {
    #[derive(Deserialize)]
    struct Row {
        x: f64,
        y: f64,
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    rdr.deserialize::<Row>()
        .map(|r| r.map(|r| Vec2::new(r.x, r.y)).map_err(|e| Error::Config(format!("{}: {e}", path.display()))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub pinned: bool,
    pub length: bool,
    pub distance: bool,
    pub convexity: bool,
    pub tmax: bool,
    pub area_rate: bool,
    pub evolution: bool,
    pub asymptotics: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Checks { pinned: true, length: true, distance: true, convexity: true, tmax: true, area_rate: true, evolution: true, asymptotics: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed relative length increase between outputs.
    pub length_rel: f64,
    /// Allowed violation of the distance bounds.
    pub distance: f64,
    /// Allowed negative `min k_g` for convex starts.
    pub convexity: f64,
    /// Allowed relative deviation of the area rate.
    pub area_rate_rel: f64,
    /// Allowed normal-speed residual at mid-run.
    pub normal_speed: f64,
    /// Allowed shortfall of the fitted curvature exponent.
    pub exponent_slack: f64,
    /// Fitting window in base arc length to the pinned end.
    pub exponent_window: [f64; 2],
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            length_rel: 1e-12,
            distance: 1e-3,
            convexity: 1e-4,
            area_rate_rel: 0.05,
            normal_speed: 1e-3,
            exponent_slack: 0.15,
            exponent_window: [1e-3, 1e-1],
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.length_rel, self.distance, self.convexity, self.area_rate_rel, self.normal_speed, self.exponent_slack];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let [lo, hi] = self.exponent_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config("exponent window must satisfy 0 < lo < hi".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSpec {
    pub checks: Checks,
    pub tolerances: Tolerances,
}

/// Parameter grid for `sweep`; empty lists keep the template value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Order assigned to every singular point.
    pub beta: Vec<f64>,
    pub cells: Vec<usize>,
    /// Size factor for the curve fixture.
    pub scale: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub beta: Option<f64>,
    pub cells: usize,
    pub scale: f64,
}

impl SweepSpec {
    pub fn is_empty(&self) -> bool {
        self.beta.is_empty() && self.cells.is_empty() && self.scale.is_empty()
    }

    /// Cartesian product in the order beta, scale, cells; empty when every list is empty.
    pub fn cells(&self, template: &Scenario) -> Vec<SweepCell> {
        if self.is_empty() {
            return Vec::new();
        }
        let betas: Vec<Option<f64>> = if self.beta.is_empty() { vec![None] } else { self.beta.iter().map(|b| Some(*b)).collect() };
        let scales = if self.scale.is_empty() { vec![1.0] } else { self.scale.clone() };
        let cells = if self.cells.is_empty() { vec![template.flow.cells] } else { self.cells.clone() };
        let mut out = Vec::new();
        for &beta in &betas {
            for &scale in &scales {
                for &c in &cells {
                    out.push(SweepCell { beta, cells: c, scale });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub metric: ConicalMetric,
    pub curve: CurveSpec,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub validation: ValidationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        self.validation.tolerances.validate()?;
        self.curve.build()?;
        Ok(())
    }

    /// Parses TOML, or JSON for `.json` files. A JSON object with a
    /// `scenario` key (as in `meta.json`) yields that entry.
    pub fn parse(text: &str, json: bool) -> Result<Scenario> {
        let s: Scenario = if json {
            let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            let v = match v.get("scenario") {
                Some(inner) => inner.clone(),
                None => v,
            };
            serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        let mut s = Self::parse(&text, json)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = std::fs::canonicalize(&base).unwrap_or(base);
        s.curve.resolve(&base);
        if let Some(out) = &mut s.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Copy with every singular order replaced by `beta`.
    pub fn with_beta(&self, beta: f64) -> Result<Scenario> {
        let mut s = self.clone();
        let pts = self
            .metric
            .singular_points()
            .iter()
            .map(|p| crate::metric::ConePoint { beta, ..*p })
            .collect();
        s.metric = ConicalMetric::new(pts, self.metric.h().clone())?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEAR: &str = r#"
name = "tear"
[metric]
singular_points = [{ x = 0.0, y = 0.0, beta = -0.5 }]
[curve]
fixture = "tear-drop"
[flow]
cells = 64
t_end = 0.01
"#;

    #[test]
    fn parses_toml_and_round_trips_json() {
        let s = Scenario::parse(TEAR, false).unwrap();
        assert_eq!(s.flow.cells, 64);
        assert_eq!(s.curve, CurveSpec::TearDrop { scale: 1.0 });
        let j = serde_json::to_string(&serde_json::json!({ "scenario": s })).unwrap();
        assert_eq!(Scenario::parse(&j, true).unwrap(), s);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = TEAR.replace("cells = 64", "cellz = 64");
        assert!(matches!(Scenario::parse(&bad, false), Err(Error::Config(_))));
        let bad = TEAR.replace("fixture = \"tear-drop\"", "fixture = \"tear-drop\"\nradius = 2.0");
        assert!(matches!(Scenario::parse(&bad, false), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_grid() {
        let s = Scenario::parse(TEAR, false).unwrap();
        assert!(SweepSpec::default().cells(&s).is_empty());
        let g = SweepSpec { beta: vec![-0.9, -0.5], cells: vec![], scale: vec![1.0, 2.0] };
        let c = g.cells(&s);
        assert_eq!(c.len(), 4);
        assert_eq!(c[1], SweepCell { beta: Some(-0.9), cells: 64, scale: 2.0 });
    }
}
