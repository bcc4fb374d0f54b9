//! Geodesics of the flat cone `|z|^{2β}|dz|²`: the closed-form families,
//! the polar ODE residual, and numerical shooting for general metrics.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::curve::{AnalyticCurve, SampledCurve};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::metric::ConicalMetric;
use crate::spline::{CubicSpline, SplineBoundary};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicFamilyParams {
    pub beta: f64,
    pub m1: f64,
    pub m2: f64,
}

impl GeodesicFamilyParams {
    pub fn new(beta: f64, m1: f64, m2: f64) -> Result<Self> {
        if !(m1 > 0.0) {
            return Err(Error::Domain(format!("m1 must be positive, got {m1}")));
        }
        if beta == -1.0 {
            return Err(Error::Domain("β = -1 members are spirals, see spiral_r".into()));
        }
        Ok(GeodesicFamilyParams { beta, m1, m2 })
    }

    /// Open interval of admissible angles, `|(β+1)φ - m2| < π/2`.
    pub fn admissible_interval(&self) -> (f64, f64) {
        let b = self.beta + 1.0;
        let (lo, hi) = ((self.m2 - FRAC_PI_2) / b, (self.m2 + FRAC_PI_2) / b);
        if b > 0.0 {
            (lo, hi)
        } else {
            (hi, lo)
        }
    }

    pub fn is_admissible(&self, phi: f64) -> bool {
        ((self.beta + 1.0) * phi - self.m2).abs() < FRAC_PI_2
    }

    /// `r(φ)` together with its φ-derivatives.
    pub fn r_jet(&self, phi: Jet) -> Jet {
        let b = self.beta + 1.0;
        (phi * b - self.m2).cos().powf(-1.0 / b).scale(self.m1)
    }

    /// Polar samples `(φ, r)` on `n` points spread over `fraction` of the
    /// admissible interval, centred on it.
    pub fn samples(&self, fraction: f64, n: usize) -> Vec<(f64, f64)> {
        let (lo, hi) = self.admissible_interval();
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo) * fraction);
        (0..n)
            .map(|i| {
                let phi = c - h + 2.0 * h * i as f64 / (n - 1) as f64;
                (phi, self.r_jet(Jet::var(phi)).value())
            })
            .collect()
    }

    /// The member as a chart curve over `fraction` of the admissible interval.
    pub fn curve(&self, fraction: f64) -> AnalyticCurve {
        let (lo, hi) = self.admissible_interval();
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo) * fraction);
        let p = *self;
        AnalyticCurve::polar(move |phi| p.r_jet(phi), Vec2::ZERO, c - h, c + h)
    }
}

/// `r = m1 cos((β+1)φ - m2)^{-1/(β+1)}`.
pub fn geodesic_r(params: &GeodesicFamilyParams, phi: f64) -> Result<f64> {
    if !params.is_admissible(phi) {
        return Err(Error::Domain(format!("angle {phi} outside the admissible interval {:?}", params.admissible_interval())));
    }
    Ok(params.m1 * ((params.beta + 1.0) * phi - params.m2).cos().powf(-1.0 / (params.beta + 1.0)))
}

/// β = -1 geodesics `r = m1 e^{m2 φ}`.
pub fn spiral_r(m1: f64, m2: f64, phi: f64) -> f64 {
    m1 * (m2 * phi).exp()
}

/// Dilation-invariant residual `|r r'' - (β+2) r'² - (β+1) r²| / r²`.
pub fn residual_from_derivatives(beta: f64, r: f64, r1: f64, r2: f64) -> f64 {
    (r * r2 - (beta + 2.0) * r1 * r1 - (beta + 1.0) * r * r).abs() / (r * r)
}

/// Maximum ODE residual over interior samples, derivatives from a
/// not-a-knot spline through the samples.
pub fn geodesic_residual(beta: f64, polar_samples: &[(f64, f64)]) -> Result<f64> {
    if polar_samples.len() < 5 {
        return Err(Error::Input("geodesic residual needs at least 5 samples".into()));
    }
    if polar_samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Input("sample angles must be strictly increasing".into()));
    }
    let phi: Vec<f64> = polar_samples.iter().map(|s| s.0).collect();
    let r: Vec<f64> = polar_samples.iter().map(|s| s.1).collect();
    let sp = CubicSpline::new(&phi, &r, SplineBoundary::NotAKnot)?;
    let mut worst: f64 = 0.0;
    for &p in &phi[1..phi.len() - 1] {
        let e = sp.eval(p);
        worst = worst.max(residual_from_derivatives(beta, e[0], e[1], e[2]));
    }
    Ok(worst)
}

/// Maximum ODE residual of a family member with exact derivatives.
pub fn geodesic_residual_analytic(params: &GeodesicFamilyParams, phis: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &p in phis {
        if !params.is_admissible(p) {
            return Err(Error::Domain(format!("angle {p} outside the admissible interval")));
        }
        let j = params.r_jet(Jet::var(p));
        worst = worst.max(residual_from_derivatives(params.beta, j.0[0], j.0[1], j.0[2]));
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct GeodesicShot {
    pub curve: SampledCurve,
    /// Metric length actually integrated.
    pub length: f64,
    /// True when the integration stopped next to a singular point.
    pub hit_singular: bool,
}

fn nearest_singular(metric: &ConicalMetric, z: Vec2) -> f64 {
    metric.singular_points().iter().map(|p| z.dist(p.position())).fold(f64::INFINITY, f64::min)
}

/// Integrates `z'' = -2⟨∇v, z'⟩ z' + |z'|² ∇v` (with `λ = e^{2v}`) in metric
/// arc length by classical RK4, starting from `start` in the chart direction
/// `direction`.
pub fn geodesic_shoot(metric: &ConicalMetric, start: Vec2, direction: Vec2, length: f64) -> Result<GeodesicShot> {
    if metric.singular_at(start).is_some() {
        return Err(Error::Domain("geodesic shot must start off the singular points".into()));
    }
    if !(length > 0.0) || direction.norm() == 0.0 {
        return Err(Error::Input("shot needs a positive length and a nonzero direction".into()));
    }
    let lam0 = metric.conformal_factor_at(start, None)?;
    let mut z = start;
    let mut v = direction.normalized() / lam0.sqrt();
    let accel = |z: Vec2, v: Vec2| -> Result<Vec2> {
        let g = metric.grad_v(z, None)?;
        Ok(-2.0 * g.dot(v) * v + v.norm2() * g)
    };
    let h_max = (length / 200.0).min(2e-3);
    let mut s = 0.0;
    let mut pts = vec![z];
    let mut hit = false;
    while s < length {
        let d = nearest_singular(metric, z);
        if d <= 1e-9 * (1.0 + z.norm()) {
            hit = true;
            break;
        }
        let lam = metric.conformal_factor_at(z, None)?;
        let mut h = h_max.min(0.02 * d * lam.sqrt()).min(length - s);
        if h <= 1e-14 * length {
            hit = true;
            break;
        }
        let step = |h: f64| -> Result<(Vec2, Vec2)> {
            let k1x = v;
            let k1v = accel(z, v)?;
            let k2x = v + 0.5 * h * k1v;
            let k2v = accel(z + 0.5 * h * k1x, k2x)?;
            let k3x = v + 0.5 * h * k2v;
            let k3v = accel(z + 0.5 * h * k2x, k3x)?;
            let k4x = v + h * k3v;
            let k4v = accel(z + h * k3x, k4x)?;
            Ok((
                z + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
                v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            ))
        };
        let (nz, nv) = loop {
            match step(h) {
                Ok(r) => break r,
                Err(Error::SingularPoint { .. }) if h > 1e-14 => h *= 0.25,
                Err(e) => return Err(e),
            }
        };
        z = nz;
        v = nv;
        s += h;
        if z != *pts.last().unwrap() {
            pts.push(z);
        }
    }
    let curve = SampledCurve::from_points(pts, false, [None, None])?;
    Ok(GeodesicShot { curve, length: s, hit_singular: hit })
}
