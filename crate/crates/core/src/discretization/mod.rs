//! Meshes over the pricing domain and the discrete operator.

mod grid;
mod stencil;

pub use grid::{Grid, SpacingKind, MIN_NODES, REFINEMENT_RATIO};
pub use stencil::OperatorStencil;
