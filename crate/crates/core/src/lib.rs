//! Degenerate curve shortening flow on surfaces with conformal conical
//! singularities: metrics, curves, geodesics, the pinned graph flow, the
//! flat-cone sector reference solver and the validators that check the
//! closed-form laws of the flow.

pub mod artifacts;
pub mod cli;
pub mod curve;
pub mod error;
pub mod flow;
pub mod geodesics;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod quadrature;
pub mod scenario;
pub mod sector;
pub mod spline;
pub mod suite;
pub mod validators;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;
