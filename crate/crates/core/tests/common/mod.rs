#![allow(dead_code)]

use convbond_core::discretization::{Grid, SpacingKind};
use convbond_core::model::{ModelParams, RawParams};
use convbond_core::solver::{solve, PriceSurface, SolverConfig};

pub fn raw_defaults() -> RawParams {
    RawParams {
        sigma: 0.3,
        r: 0.05,
        q: 0.03,
        c: 2.0,
        gamma: 1.0,
        face_value: 100.0,
        maturity: 1.0,
    }
}

/// One-year bond; no conversion is ever optimal.
pub fn defaults() -> ModelParams<f64> {
    ModelParams::validate(&raw_defaults()).unwrap()
}

/// Five-year bond with a nonempty conversion region.
pub fn reference() -> ModelParams<f64> {
    ModelParams::validate(&RawParams {
        sigma: 0.2,
        r: 0.1,
        q: 0.1,
        c: 2.0,
        gamma: 1.0,
        face_value: 100.0,
        maturity: 5.0,
    })
    .unwrap()
}

pub fn uniform(p: &ModelParams<f64>, n: usize) -> Grid<f64> {
    Grid::build(p, n, n, SpacingKind::Uniform).unwrap()
}

pub fn solve_uniform(p: &ModelParams<f64>, n: usize) -> PriceSurface<f64> {
    solve(p, &uniform(p, n), &SolverConfig::default()).unwrap()
}
