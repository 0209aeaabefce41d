//! Convertible bonds with a call feature, priced as a parabolic obstacle
//! problem on `(0, K/gamma) x (0, T)`, together with a toolkit that measures
//! the free boundary between continuation and conversion.
//!
//! Numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`, which is what the CLI and the acceptance suite use.

pub mod discretization;
pub mod error;
pub mod export;
pub mod fb;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ModelParams = model::ModelParams<f64>;
pub type Grid = discretization::Grid<f64>;
pub type OperatorStencil = discretization::OperatorStencil<f64>;
pub type PriceSurface = solver::PriceSurface<f64>;
pub type TransformedSurface = transforms::TransformedSurface<f64>;
pub type FreeBoundaryCurve = fb::FreeBoundaryCurve<f64>;
