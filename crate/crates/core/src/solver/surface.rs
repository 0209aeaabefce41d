use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::solver::{ComplementarityResidual, Scheme};

/// How one backward step `t_{n+1} -> t_n` was taken. Kept so that the
/// complementarity residual can be recomputed without rerunning the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    /// Implicitness of each sub-step (1 = implicit Euler, 1/2 = Crank-Nicolson).
    pub theta: T,
    /// Intermediate slice at `t_n + dt/2` when the step was split into two
    /// implicit half-steps (Rannacher start-up).
    pub midpoint: Option<Vec<T>>,
}

/// Bond values `V[n][i] = V(x_i, t_n)`, ordered with `t` increasing.
#[derive(Debug, Clone)]
pub struct PriceSurface<T> {
    pub(crate) values: Vec<Vec<T>>,
    pub(crate) grid: Grid<T>,
    pub(crate) params: ModelParams<T>,
    pub(crate) epsilon: T,
    pub(crate) scheme: Scheme,
    pub(crate) tol: T,
    pub(crate) steps: Vec<StepRecord<T>>,
    pub(crate) residuals: Vec<ComplementarityResidual<T>>,
    pub(crate) iterations: Vec<usize>,
}

impl<T: Scalar> PriceSurface<T> {
    /// Wraps externally produced values (synthetic inputs, fixtures).
    ///
    /// Every step is treated as implicit Euler with `epsilon = 0`. No
    /// residuals or iteration counts are attached.
    pub fn from_values(params: ModelParams<T>, grid: Grid<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if values.len() != grid.nt() || values.iter().any(|row| row.len() != grid.nx()) {
            return Err(Error::InvalidArgument(format!(
                "surface shape must be {} x {}",
                grid.nt(),
                grid.nx()
            )));
        }
        let steps = (0..grid.nt() - 1)
            .map(|_| StepRecord {
                theta: T::one(),
                midpoint: None,
            })
            .collect();
        Ok(Self {
            values,
            grid,
            params,
            epsilon: T::zero(),
            scheme: Scheme::ImplicitEuler,
            tol: T::lit(1e-10) * params.face(),
            steps,
            residuals: Vec::new(),
            iterations: Vec::new(),
        })
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    /// Slice at time index `n`.
    pub fn slice(&self, n: usize) -> &[T] {
        &self.values[n]
    }

    pub fn value(&self, n: usize, i: usize) -> T {
        self.values[n][i]
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }
    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }
    pub fn epsilon(&self) -> T {
        self.epsilon
    }
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    /// Iteration tolerance the surface was solved to (cash).
    pub fn tol(&self) -> T {
        self.tol
    }
    pub fn steps(&self) -> &[StepRecord<T>] {
        &self.steps
    }
    /// Residual recorded by the solver for each step `n` (`t_{n+1} -> t_n`).
    pub fn residuals(&self) -> &[ComplementarityResidual<T>] {
        &self.residuals
    }
    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    /// `V - gamma x` at node `(n, i)`.
    pub fn obstacle_gap(&self, n: usize, i: usize) -> T {
        self.values[n][i] - self.params.gamma() * self.grid.x()[i]
    }

    /// Linear interpolation in `x` on slice `n`.
    pub fn interpolate_x(&self, n: usize, x: T) -> T {
        let xs = self.grid.x();
        let row = &self.values[n];
        let j = xs.partition_point(|&xi| xi <= x).clamp(1, xs.len() - 1);
        let w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
        row[j - 1] + w * (row[j] - row[j - 1])
    }
}
