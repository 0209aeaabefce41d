//! Backward time marching of the obstacle problem
//!
//! `max(min(L V - c, V - gamma x), V - K) = 0` on `(0, K/gamma) x (0, T)`,
//! `V(x, T) = K`, `V(K/gamma, t) = K`,
//!
//! with a projected-SOR solve of the linear complementarity problem at
//! every step.

mod properties;
mod psor;
mod regularity;
mod residual;
mod surface;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, OperatorStencil};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

pub use properties::{bounds_report, monotonicity_report, BoundsReport, MonotonicityReport};
pub use psor::Relaxation;
pub use regularity::{
    boundary_regularity_check, compare_regularity, BoundaryRegularity, RegularityComparison,
    REGULARITY_SHRINK_RATIO,
};
pub use residual::{nodewise_residuals, residual_report, ComplementarityResidual};
pub use surface::{PriceSurface, StepRecord};

use psor::{no_convergence, solve_step, PsorSettings, StepProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitEuler,
    #[default]
    CrankNicolson,
}

impl Scheme {
    pub fn theta<T: Scalar>(self) -> T {
        match self {
            Scheme::ImplicitEuler => T::one(),
            Scheme::CrankNicolson => T::lit(0.5),
        }
    }
}

/// Solver knobs. `tol` and `max_iter` default to `1e-10 K` and `10 nx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub scheme: Scheme,
    /// Replace the first Crank-Nicolson step by two implicit half-steps.
    pub rannacher: bool,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub relaxation: Relaxation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            scheme: Scheme::CrankNicolson,
            rannacher: true,
            tol: None,
            max_iter: None,
            relaxation: Relaxation::default(),
        }
    }
}

impl SolverConfig {
    pub fn implicit() -> Self {
        Self {
            scheme: Scheme::ImplicitEuler,
            ..Self::default()
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn resolved_tol<T: Scalar>(&self, params: &ModelParams<T>) -> T {
        match self.tol {
            Some(tol) => T::lit(tol),
            None => T::lit(1e-10) * params.face(),
        }
    }

    pub fn resolved_max_iter(&self, nx: usize) -> usize {
        self.max_iter.unwrap_or(10 * nx)
    }
}

/// Exact backward increment of `dV/dt = rV - c` over `dt`.
pub(crate) fn origin_increment<T: Scalar>(params: &ModelParams<T>, v_next: T, dt: T) -> T {
    let accrued = -(-params.r() * dt).exp_m1();
    v_next - (v_next - params.c() / params.r()) * accrued
}

/// Prices the bond on `grid` by backward time marching.
pub fn solve<T: Scalar>(
    params: &ModelParams<T>,
    grid: &Grid<T>,
    config: &SolverConfig,
) -> Result<PriceSurface<T>> {
    if !(config.epsilon >= 0.0) || !config.epsilon.is_finite() {
        return Err(Error::InvalidArgument("epsilon must be finite and >= 0".into()));
    }
    let tol = config.resolved_tol(params);
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let epsilon = T::lit(config.epsilon);
    let stencil = OperatorStencil::assemble(params, grid, epsilon);
    let degenerate = stencil.degenerate_origin();
    let face = params.face();
    let nx = grid.nx();
    let nt = grid.nt();
    let lower: Vec<T> = grid.x().iter().map(|&x| params.gamma() * x).collect();
    let settings = PsorSettings {
        relaxation: config.relaxation,
        tol,
        max_iter: config.resolved_max_iter(nx),
    };

    let mut values = vec![Vec::new(); nt];
    values[nt - 1] = vec![face; nx];
    let mut steps = vec![
        StepRecord {
            theta: T::one(),
            midpoint: None
        };
        nt - 1
    ];
    let mut residuals = vec![ComplementarityResidual::default(); nt - 1];
    let mut iterations = vec![0usize; nt - 1];

    let base_theta: T = config.scheme.theta();
    let mut work = Vec::with_capacity(nx);
    for n in (0..nt - 1).rev() {
        let dt = grid.dt(n);
        let split = config.scheme == Scheme::CrankNicolson && config.rannacher && n == nt - 2;
        let substeps: Vec<(T, T)> = if split {
            let half = dt * T::lit(0.5);
            vec![(T::one(), half), (T::one(), half)]
        } else {
            vec![(base_theta, dt)]
        };

        let mut current = values[n + 1].clone();
        let mut midpoint = None;
        let mut outcome_worst = ComplementarityResidual::default();
        let mut iters = 0;
        for (k, &(theta, h)) in substeps.iter().enumerate() {
            let problem = StepProblem {
                stencil: &stencil,
                theta,
                dt: h,
                coupon: params.c(),
                lower: &lower,
                upper: face,
                origin: degenerate.then(|| origin_increment(params, current[0], h)),
            };
            let outcome = solve_step(&problem, &settings, &current, &mut work)
                .map_err(|fail| no_convergence(n, grid.t()[n], fail))?;
            iters += outcome.iterations;
            if outcome.residual >= outcome_worst.max_abs {
                outcome_worst = ComplementarityResidual {
                    step: n,
                    max_abs: outcome.residual,
                    location: outcome.location,
                };
            }
            std::mem::swap(&mut current, &mut work);
            if split && k == 0 {
                midpoint = Some(current.clone());
            }
        }
        outcome_worst.step = n;

        let slack = T::lit(1e-10) * face;
        for (i, (&v, &lo)) in current.iter().zip(&lower).enumerate() {
            if !v.is_finite() || v < lo - slack || v > face + slack {
                let excess = if v.is_finite() {
                    (lo - v).max(v - face).as_f64()
                } else {
                    f64::INFINITY
                };
                return Err(Error::ObstacleViolation {
                    step: n,
                    node: i,
                    excess,
                });
            }
        }

        values[n] = current;
        steps[n] = StepRecord {
            theta: if split { T::one() } else { base_theta },
            midpoint,
        };
        residuals[n] = outcome_worst;
        iterations[n] = iters;
    }

    Ok(PriceSurface {
        values,
        grid: grid.clone(),
        params: *params,
        epsilon,
        scheme: config.scheme,
        tol,
        steps,
        residuals,
        iterations,
    })
}

/// Surfaces for a decreasing family of regularisation parameters.
#[derive(Debug, Clone)]
pub struct RegularizedFamily<T> {
    pub epsilons: Vec<f64>,
    pub surfaces: Vec<PriceSurface<T>>,
    /// `max |W_{k+1} - W_k|` over nodes with `x >= margin`.
    pub consecutive_differences: Vec<T>,
    /// `max_n |(W(x_1, t_n) - W(0, t_n)) / x_1|` per surface.
    pub origin_slopes: Vec<T>,
    pub margin: T,
}

impl<T: Scalar> RegularizedFamily<T> {
    pub fn differences_decrease(&self) -> bool {
        self.consecutive_differences.windows(2).all(|w| w[1] < w[0])
    }
}

/// Fraction of the domain next to `x = 0` excluded from family comparisons.
pub const FAMILY_MARGIN: f64 = 0.1;

/// Solves for every `epsilon` in `epsilons` (strictly decreasing, `>= 0`)
/// in parallel and compares consecutive surfaces away from the origin.
pub fn solve_regularized_family<T: Scalar>(
    params: &ModelParams<T>,
    grid: &Grid<T>,
    epsilons: &[f64],
    base: &SolverConfig,
) -> Result<RegularizedFamily<T>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon family".into()));
    }
    if epsilons.iter().any(|&e| !(e >= 0.0) || !e.is_finite())
        || epsilons.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(Error::InvalidArgument(
            "epsilons must be finite, non-negative and strictly decreasing".into(),
        ));
    }
    let surfaces = epsilons
        .par_iter()
        .map(|&eps| solve(params, grid, &base.with_epsilon(eps)))
        .collect::<Result<Vec<_>>>()?;

    let margin = T::lit(FAMILY_MARGIN) * params.x_max();
    let first_kept = grid.x().partition_point(|&x| x < margin);
    let consecutive_differences = surfaces
        .windows(2)
        .map(|pair| {
            pair[0]
                .values()
                .iter()
                .zip(pair[1].values())
                .flat_map(|(a, b)| a[first_kept..].iter().zip(&b[first_kept..]))
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max)
        })
        .collect();
    let h0 = grid.dx(0);
    let origin_slopes = surfaces
        .iter()
        .map(|s| {
            s.values()
                .iter()
                .map(|row| ((row[1] - row[0]) / h0).abs())
                .fold(T::zero(), T::max)
        })
        .collect();

    Ok(RegularizedFamily {
        epsilons: epsilons.to_vec(),
        surfaces,
        consecutive_differences,
        origin_slopes,
        margin,
    })
}
