//! Cox-Ross-Rubinstein lattice for the callable convertible, used as an
//! independent check on the finite-difference surface.
//!
//! The lattice prices the untruncated problem (spots above `K/gamma` are
//! allowed and convert immediately), so agreement with the PDE is only
//! meaningful a little below `K/gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

pub const MIN_TREE_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSpec<T> {
    steps: usize,
    params: ModelParams<T>,
    anchor_spot: T,
    up: T,
    prob: T,
}

impl<T: Scalar> TreeSpec<T> {
    pub fn new(params: ModelParams<T>, steps: usize, anchor_spot: T) -> Result<Self> {
        if steps < MIN_TREE_STEPS {
            return Err(Error::InvalidArgument(format!(
                "tree needs at least {MIN_TREE_STEPS} steps, got {steps}"
            )));
        }
        if !(anchor_spot >= T::zero()) || !anchor_spot.is_finite() {
            return Err(Error::InvalidArgument("anchor spot must be finite and >= 0".into()));
        }
        let dt = params.maturity() / T::from_count(steps);
        let up = (params.sigma() * dt.sqrt()).exp();
        let down = T::one() / up;
        let prob = (((params.r() - params.q()) * dt).exp() - down) / (up - down);
        if !(prob > T::zero() && prob < T::one()) {
            return Err(Error::ProbabilityOutOfRange { p: prob.as_f64() });
        }
        Ok(Self {
            steps,
            params,
            anchor_spot,
            up,
            prob,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn anchor_spot(&self) -> T {
        self.anchor_spot
    }
    /// Risk-neutral up probability.
    pub fn probability(&self) -> T {
        self.prob
    }
}

/// Backward induction with `max(gamma s, min(e^{-r dt} E[V] + c dt, K))` at
/// every node and `max(gamma s, K)` at maturity.
pub fn tree_price<T: Scalar>(spec: &TreeSpec<T>) -> T {
    let p = &spec.params;
    let n = spec.steps;
    let dt = p.maturity() / T::from_count(n);
    let discount = (-p.r() * dt).exp();
    let coupon = p.c() * dt;
    let face = p.face();
    let gamma = p.gamma();
    let up = spec.up;
    let prob = spec.prob;
    let spot = |step: usize, ups: usize| {
        spec.anchor_spot * up.powi(2 * ups as i32 - step as i32)
    };

    let mut values: Vec<T> = (0..=n).map(|k| (gamma * spot(n, k)).max(face)).collect();
    for step in (0..n).rev() {
        for k in 0..=step {
            let cont = discount * (prob * values[k + 1] + (T::one() - prob) * values[k]) + coupon;
            let conv = gamma * spot(step, k);
            let v = conv.max(cont.min(face));
            debug_assert!(v >= conv && v <= face.max(conv));
            values[k] = v;
        }
    }
    values[0]
}

/// Lattice values at doubling step counts, for convergence monitoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConvergence {
    pub steps: Vec<usize>,
    pub values: Vec<f64>,
}

impl TreeConvergence {
    /// `|V(N_{k+1}) - V(N_k)|`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }
}

pub fn tree_convergence<T: Scalar>(
    params: &ModelParams<T>,
    spot: T,
    steps: &[usize],
) -> Result<TreeConvergence> {
    let values = steps
        .iter()
        .map(|&n| Ok(tree_price(&TreeSpec::new(*params, n, spot)?).as_f64()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeConvergence {
        steps: steps.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawParams;

    fn defaults() -> ModelParams<f64> {
        ModelParams::validate(&RawParams {
            sigma: 0.3,
            r: 0.05,
            q: 0.03,
            c: 2.0,
            gamma: 1.0,
            face_value: 100.0,
            maturity: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn zero_spot_matches_closed_form() {
        let p = defaults();
        let v = tree_price(&TreeSpec::new(p, 2000, 0.0).unwrap());
        let exact = p.boundary_value_x0(0.0).unwrap();
        assert!((v - exact).abs() <= 1e-3 * 100.0, "{v} vs {exact}");
    }

    #[test]
    fn deep_conversion_returns_conversion_value() {
        let p = defaults();
        let v = tree_price(&TreeSpec::new(p, 200, 150.0).unwrap());
        assert_eq!(v, 150.0);
    }

    #[test]
    fn rejects_short_trees_and_bad_probabilities() {
        let p = defaults();
        assert!(matches!(TreeSpec::new(p, 10, 80.0), Err(Error::InvalidArgument(_))));
        // A huge carry over one coarse step pushes p above one.
        let drift = ModelParams::validate(&RawParams {
            sigma: 0.01,
            r: 3.0,
            q: 0.05,
            c: 1.0,
            gamma: 1.0,
            face_value: 100.0,
            maturity: 10.0,
        })
        .unwrap();
        assert!(matches!(
            TreeSpec::new(drift, 64, 80.0),
            Err(Error::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn doubling_increments_shrink() {
        let conv = tree_convergence(&defaults(), 80.0, &[250, 500, 1000, 2000]).unwrap();
        let inc = conv.increments();
        assert!(inc.windows(2).all(|w| w[1] < w[0]), "{inc:?}");
        assert!(*inc.last().unwrap() < 5e-4 * 100.0);
    }
}
