//! Pointwise formulas for a normal graph `σ = γ + wξ` over a base curve.

use crate::curve::geodesic_bracket;
use crate::error::{Error, Result};
use crate::metric::{ConicalMetric, Offset};
use crate::vec2::Vec2;

/// Arc-length frame of the base curve at one point. `offset`, when set,
/// holds `γ - p_j` for the anchoring cone point `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseFrame {
    pub pos: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub k: f64,
    pub k_s: f64,
    pub offset: Offset,
}

/// Everything the flow needs at one point of the graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphPoint {
    pub sigma: Vec2,
    /// `σ - p_j` for the anchoring cone point, if any.
    pub offset: Offset,
    /// `1 - kw`.
    pub a: f64,
    /// `(1 - kw)² + w_s²`.
    pub q: f64,
    pub k_sigma: f64,
    pub normal_sigma: Vec2,
    /// `λ(σ)`.
    pub lambda: f64,
    /// `k_σ - Σ β_j ρ_j(σ) - ⟨Dh(σ), ξ_σ⟩`.
    pub bracket: f64,
    pub k_g: f64,
    /// Normal-graph velocity `λ^{-1} (√Q / A) · bracket`.
    pub w_t: f64,
}

fn check_graph(k: f64, w: f64) -> Result<f64> {
    let a = 1.0 - k * w;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::GraphValidity(k * w));
    }
    Ok(a)
}

/// Euclidean curvature of the graph:
/// `[A w_ss + 2k w_s² + k_s w_s w + k A²] / (A² + w_s²)^{3/2}`, `A = 1 - kw`.
pub fn graph_curvature(frame: &BaseFrame, w: f64, w_s: f64, w_ss: f64) -> Result<f64> {
    let a = check_graph(frame.k, w)?;
    let q = a * a + w_s * w_s;
    let num = a * w_ss + 2.0 * frame.k * w_s * w_s + frame.k_s * w_s * w + frame.k * a * a;
    Ok(num / (q * q.sqrt()))
}

/// Left unit normal of the graph, `(-w_s τ + A ξ) / √Q`.
pub fn graph_normal(frame: &BaseFrame, w: f64, w_s: f64) -> Result<Vec2> {
    let a = check_graph(frame.k, w)?;
    let q = (a * a + w_s * w_s).sqrt();
    Ok((-w_s / q) * frame.tangent + (a / q) * frame.normal)
}

/// Full pointwise evaluation of the graph flow.
pub fn graph_point(metric: &ConicalMetric, frame: &BaseFrame, w: f64, w_s: f64, w_ss: f64) -> Result<GraphPoint> {
    let a = check_graph(frame.k, w)?;
    let q = a * a + w_s * w_s;
    let sq = q.sqrt();
    let k_sigma = (a * w_ss + 2.0 * frame.k * w_s * w_s + frame.k_s * w_s * w + frame.k * a * a) / (q * sq);
    let normal_sigma = (-w_s / sq) * frame.tangent + (a / sq) * frame.normal;
    let sigma = frame.pos + w * frame.normal;
    let offset = frame.offset.map(|(j, d)| (j, d + w * frame.normal));
    let lambda = metric.conformal_factor_at(sigma, offset)?;
    let bracket = geodesic_bracket(metric, sigma, normal_sigma, k_sigma, offset)?;
    let k_g = bracket / lambda.sqrt();
    let w_t = bracket * sq / (a * lambda);
    if !(k_g.is_finite() && w_t.is_finite()) {
        return Err(Error::GraphValidity(frame.k * w));
    }
    Ok(GraphPoint { sigma, offset, a, q, k_sigma, normal_sigma, lambda, bracket, k_g, w_t })
}

/// Geodesic curvature of the graph in the conical metric.
pub fn graph_geodesic_curvature(metric: &ConicalMetric, frame: &BaseFrame, w: f64, w_s: f64, w_ss: f64) -> Result<f64> {
    Ok(graph_point(metric, frame, w, w_s, w_ss)?.k_g)
}

/// Tangential speed `Φ = λ^{1/2} w_s w_t / √Q`.
pub fn phi_from(point: &GraphPoint, w_s: f64) -> f64 {
    point.lambda.sqrt() * w_s * point.w_t / point.q.sqrt()
}

/// Normal speed of the graph in the metric, `λ^{1/2} w_t A / √Q`.
pub fn normal_speed(lambda: f64, w_t: f64, a: f64, q: f64) -> f64 {
    lambda.sqrt() * w_t * a / q.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{geodesic_curvature, AnalyticCurve, ParametricCurve};

    fn frame_of(c: &dyn ParametricCurve, t: f64) -> BaseFrame {
        let j = c.jet(t);
        BaseFrame { pos: j.pos, tangent: j.tangent(), normal: j.normal(), k: j.curvature(), k_s: j.curvature_derivative(), offset: None }
    }

    #[test]
    fn zero_graph_reduces_to_base() {
        let m = ConicalMetric::flat_cone(-0.4).unwrap();
        let c = AnalyticCurve::ellipse(Vec2::new(0.2, 0.1), 1.5, 0.7);
        for t in [0.1, 1.0, 2.5, 4.0] {
            let f = frame_of(&c, t);
            assert_eq!(graph_curvature(&f, 0.0, 0.0, 0.0).unwrap(), f.k);
            let kg = graph_geodesic_curvature(&m, &f, 0.0, 0.0, 0.0).unwrap();
            assert!((kg - geodesic_curvature(&m, &c, t).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn offset_circle() {
        let c = AnalyticCurve::circle(Vec2::ZERO, 1.0);
        let f = frame_of(&c, 0.3);
        for w in [0.2, -0.3] {
            assert!((graph_curvature(&f, w, 0.0, 0.0).unwrap() - 1.0 / (1.0 - w)).abs() < 1e-14);
        }
        assert!(matches!(graph_curvature(&f, 1.0, 0.0, 0.0), Err(Error::GraphValidity(_))));
    }

    #[test]
    fn ray_is_stationary() {
        let m = ConicalMetric::flat_cone(-0.5).unwrap();
        let f = BaseFrame {
            pos: Vec2::new(0.6, 0.8),
            tangent: Vec2::new(0.6, 0.8),
            normal: Vec2::new(-0.8, 0.6),
            k: 0.0,
            k_s: 0.0,
            offset: None,
        };
        let g = graph_point(&m, &f, 0.0, 0.0, 0.0).unwrap();
        assert!(g.k_g.abs() < 1e-15 && g.w_t.abs() < 1e-15);
    }
}
