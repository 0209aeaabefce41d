use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Minimum node count along either axis.
pub const MIN_NODES: usize = 16;

/// Ratio between the finest and coarsest cell of a refined grid.
pub const REFINEMENT_RATIO: f64 = 1.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingKind {
    #[default]
    Uniform,
    /// Geometric cells shrinking toward `x = K/gamma`.
    GeometricRight,
    /// Geometric cells shrinking toward `x = 0` (mirror image of
    /// `GeometricRight`, produced by the reflection transform).
    GeometricLeft,
}

impl SpacingKind {
    pub fn mirrored(self) -> Self {
        match self {
            SpacingKind::Uniform => SpacingKind::Uniform,
            SpacingKind::GeometricRight => SpacingKind::GeometricLeft,
            SpacingKind::GeometricLeft => SpacingKind::GeometricRight,
        }
    }
}

/// Tensor mesh over `[0, x_max] x [0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    x: Vec<T>,
    t: Vec<T>,
    spacing: SpacingKind,
}

impl<T: Scalar> Grid<T> {
    /// Builds a mesh with `nx` spatial and `nt` temporal nodes. Time is
    /// always uniform.
    pub fn build(params: &ModelParams<T>, nx: usize, nt: usize, spacing: SpacingKind) -> Result<Self> {
        check_count("spatial", nx)?;
        check_count("temporal", nt)?;
        let x_max = params.x_max();
        let x = match spacing {
            SpacingKind::Uniform => uniform(x_max, nx),
            SpacingKind::GeometricRight => geometric_right(x_max, nx),
            SpacingKind::GeometricLeft => geometric_right(x_max, nx)
                .iter()
                .rev()
                .map(|&xi| x_max - xi)
                .collect(),
        };
        let t = uniform(params.maturity(), nt);
        Self::from_nodes(x, t, spacing)
    }

    /// Wraps explicit node vectors, checking the mesh invariants.
    pub fn from_nodes(x: Vec<T>, t: Vec<T>, spacing: SpacingKind) -> Result<Self> {
        check_count("spatial", x.len())?;
        check_count("temporal", t.len())?;
        for (axis, nodes) in [("x", &x), ("t", &t)] {
            if nodes[0] != T::zero() {
                return Err(Error::InvalidGrid(format!("{axis} nodes must start at 0")));
            }
            if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidGrid(format!(
                    "{axis} nodes must be strictly increasing"
                )));
            }
        }
        Ok(Self { x, t, spacing })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }
    pub fn t(&self) -> &[T] {
        &self.t
    }
    pub fn nx(&self) -> usize {
        self.x.len()
    }
    pub fn nt(&self) -> usize {
        self.t.len()
    }
    pub fn spacing(&self) -> SpacingKind {
        self.spacing
    }
    pub fn x_max(&self) -> T {
        self.x[self.x.len() - 1]
    }
    pub fn horizon(&self) -> T {
        self.t[self.t.len() - 1]
    }

    /// Width of cell `[x_i, x_{i+1}]`.
    pub fn dx(&self, i: usize) -> T {
        self.x[i + 1] - self.x[i]
    }

    /// Length of step `[t_n, t_{n+1}]`.
    pub fn dt(&self, n: usize) -> T {
        self.t[n + 1] - self.t[n]
    }

    pub fn max_dx(&self) -> T {
        (0..self.nx() - 1).map(|i| self.dx(i)).fold(T::zero(), T::max)
    }

    pub fn min_dx(&self) -> T {
        (0..self.nx() - 1)
            .map(|i| self.dx(i))
            .fold(T::infinity(), T::min)
    }

    pub fn max_dt(&self) -> T {
        (0..self.nt() - 1).map(|n| self.dt(n)).fold(T::zero(), T::max)
    }

    /// Index of the node nearest to `x`.
    pub fn nearest_x(&self, x: T) -> usize {
        nearest(&self.x, x)
    }

    pub fn nearest_t(&self, t: T) -> usize {
        nearest(&self.t, t)
    }

    /// Mesh reflected in both axes: `y = x_max - x`, `tau = horizon - t`.
    pub fn reflected(&self) -> Self {
        let x_max = self.x_max();
        let horizon = self.horizon();
        let x: Vec<T> = self.x.iter().rev().map(|&xi| x_max - xi).collect();
        let t: Vec<T> = self.t.iter().rev().map(|&ti| horizon - ti).collect();
        Self {
            x,
            t,
            spacing: self.spacing.mirrored(),
        }
    }
}

fn check_count(axis: &'static str, n: usize) -> Result<()> {
    if n < MIN_NODES {
        Err(Error::GridTooSmall {
            axis,
            min: MIN_NODES,
            got: n,
        })
    } else {
        Ok(())
    }
}

fn uniform<T: Scalar>(extent: T, n: usize) -> Vec<T> {
    let cells = T::from_count(n - 1);
    let mut nodes: Vec<T> = (0..n).map(|i| extent * T::from_count(i) / cells).collect();
    nodes[n - 1] = extent;
    nodes
}

fn geometric_right<T: Scalar>(extent: T, n: usize) -> Vec<T> {
    let cells = n - 1;
    let ratio = T::lit(REFINEMENT_RATIO).powf(T::one() / T::from_count(cells - 1));
    let total = (T::one() - ratio.powi(cells as i32)) / (T::one() - ratio);
    let first = extent / total;
    let mut nodes = Vec::with_capacity(n);
    let mut x = T::zero();
    let mut width = first;
    nodes.push(x);
    for _ in 0..cells {
        x = x + width;
        nodes.push(x);
        width = width * ratio;
    }
    nodes[n - 1] = extent;
    nodes
}

fn nearest<T: Scalar>(nodes: &[T], v: T) -> usize {
    let idx = nodes.partition_point(|&x| x < v);
    if idx == 0 {
        0
    } else if idx >= nodes.len() {
        nodes.len() - 1
    } else if (v - nodes[idx - 1]) <= (nodes[idx] - v) {
        idx - 1
    } else {
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawParams;

    fn params() -> ModelParams<f64> {
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
    fn uniform_steps() {
        let g = Grid::build(&params(), 101, 101, SpacingKind::Uniform).unwrap();
        assert_eq!(g.x()[0], 0.0);
        assert_eq!(g.x_max(), 100.0);
        assert_eq!(g.horizon(), 1.0);
        for i in 0..100 {
            assert!((g.dx(i) - 1.0).abs() < 1e-12);
            assert!((g.dt(i) - 0.01).abs() < 1e-14);
        }
    }

    #[test]
    fn minimum_counts() {
        assert!(Grid::build(&params(), 16, 16, SpacingKind::Uniform).is_ok());
        let err = Grid::build(&params(), 8, 101, SpacingKind::Uniform).unwrap_err();
        assert_eq!(err.code(), "GridTooSmall");
        assert!(Grid::build(&params(), 101, 15, SpacingKind::Uniform).is_err());
    }

    #[test]
    fn geometric_grid_refines_toward_right_edge() {
        let g = Grid::build(&params(), 64, 16, SpacingKind::GeometricRight).unwrap();
        assert_eq!(g.x_max(), 100.0);
        let first = g.dx(0);
        let last = g.dx(g.nx() - 2);
        assert!(last <= first / 8.0 * (1.0 + 1e-9));
        for i in 1..g.nx() - 1 {
            assert!(g.dx(i) < g.dx(i - 1));
        }
    }

    #[test]
    fn reflection_is_an_involution_on_uniform_nodes() {
        let g = Grid::build(&params(), 33, 17, SpacingKind::Uniform).unwrap();
        let back = g.reflected().reflected();
        assert_eq!(back.x(), g.x());
        assert_eq!(back.t(), g.t());
    }

    #[test]
    fn rejects_unsorted_nodes() {
        let mut x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        x.swap(3, 4);
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(Grid::from_nodes(x, t, SpacingKind::Uniform).is_err());
    }

    #[test]
    fn nearest_node_lookup() {
        let g = Grid::build(&params(), 101, 16, SpacingKind::Uniform).unwrap();
        assert_eq!(g.nearest_x(80.2), 80);
        assert_eq!(g.nearest_x(-3.0), 0);
        assert_eq!(g.nearest_x(1e9), 100);
    }
}
