use crate::discretization::grid::Grid;
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Tridiagonal discretisation of the spatial part of the pricing operator,
///
/// `A V = -1/2 sigma^2 (x^2 + eps) V_xx - (r - q) x V_x + r V`,
///
/// so that the full operator is `-d/dt + A`. Row `i` reads
/// `(A V)_i = sub_i V_{i-1} + diag_i V_i + sup_i V_{i+1}`.
///
/// The last row (`x = K/gamma`) is a Dirichlet row and is stored as zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorStencil<T> {
    sub: Vec<T>,
    diag: Vec<T>,
    sup: Vec<T>,
    diffusion: Vec<T>,
    convection: Vec<T>,
    upwind: Vec<bool>,
    reaction: T,
    epsilon: T,
}

impl<T: Scalar> OperatorStencil<T> {
    /// Central differences on the (possibly non-uniform) mesh, switching to
    /// one-sided convection at any node where the central weights would
    /// give a positive off-diagonal.
    ///
    /// At `x = 0`: with `epsilon == 0` the row is pure reaction `(0, r, 0)`;
    /// with `epsilon > 0` the even reflection across the origin is imposed as
    /// the ghost value `V_{-1} = V_1`.
    pub fn assemble(params: &ModelParams<T>, grid: &Grid<T>, epsilon: T) -> Self {
        let n = grid.nx();
        let x = grid.x();
        let half_var = T::lit(0.5) * params.sigma() * params.sigma();
        let drift = params.r() - params.q();
        let r = params.r();
        let two = T::lit(2.0);

        let mut sub = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut sup = vec![T::zero(); n];
        let mut upwind = vec![false; n];
        let diffusion: Vec<T> = x.iter().map(|&xi| half_var * (xi * xi + epsilon)).collect();
        let convection: Vec<T> = x.iter().map(|&xi| drift * xi).collect();

        // x = 0: convection vanishes identically.
        let h0 = grid.dx(0);
        let d0 = diffusion[0];
        diag[0] = two * d0 / (h0 * h0) + r;
        sup[0] = -two * d0 / (h0 * h0);

        for i in 1..n - 1 {
            let hm = grid.dx(i - 1);
            let hp = grid.dx(i);
            let span = hm + hp;
            let d = diffusion[i];
            let mu = convection[i];

            let wm = two / (hm * span);
            let wp = two / (hp * span);
            let w0 = -(wm + wp);

            let cm = -hp / (hm * span);
            let cp = hm / (hp * span);
            let c0 = -(cm + cp);

            let mut s = -d * wm - mu * cm;
            let mut p = -d * wp - mu * cp;
            let mut m = -d * w0 - mu * c0 + r;

            if s > T::zero() || p > T::zero() {
                upwind[i] = true;
                if mu >= T::zero() {
                    s = -d * wm;
                    p = -d * wp - mu / hp;
                    m = -d * w0 + mu / hp + r;
                } else {
                    s = -d * wm + mu / hm;
                    p = -d * wp;
                    m = -d * w0 - mu / hm + r;
                }
            }
            sub[i] = s;
            sup[i] = p;
            diag[i] = m;
        }

        Self {
            sub,
            diag,
            sup,
            diffusion,
            convection,
            upwind,
            reaction: r,
            epsilon,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn sub(&self) -> &[T] {
        &self.sub
    }
    pub fn diag(&self) -> &[T] {
        &self.diag
    }
    pub fn sup(&self) -> &[T] {
        &self.sup
    }
    /// `1/2 sigma^2 (x_i^2 + eps)` per node.
    pub fn diffusion(&self) -> &[T] {
        &self.diffusion
    }
    /// `(r - q) x_i` per node.
    pub fn convection(&self) -> &[T] {
        &self.convection
    }
    pub fn upwind(&self) -> &[bool] {
        &self.upwind
    }
    pub fn reaction(&self) -> T {
        self.reaction
    }
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// True when row 0 has no spatial coupling (`epsilon == 0`).
    pub fn degenerate_origin(&self) -> bool {
        self.epsilon == T::zero()
    }

    /// Applies the operator to `v` at row `i` (not valid for the last row).
    #[inline]
    pub fn apply_row(&self, v: &[T], i: usize) -> T {
        let left = if i == 0 { T::zero() } else { self.sub[i] * v[i - 1] };
        left + self.diag[i] * v[i] + self.sup[i] * v[i + 1]
    }

    /// `(A v)_i` for every row but the last, which is reported as zero.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(v.len(), n, "vector length must match the stencil");
        let mut out: Vec<T> = (0..n - 1).map(|i| self.apply_row(v, i)).collect();
        out.push(T::zero());
        out
    }

    /// Checks, row by row, the M-matrix sign pattern and diagonal dominance
    /// of `I + theta dt A` for any `theta dt >= 0`. Returns the first
    /// offending row.
    pub fn m_matrix_violation(&self) -> Option<usize> {
        (0..self.len() - 1).find(|&i| {
            let off = self.sub[i].abs() + self.sup[i].abs();
            self.sub[i] > T::zero() || self.sup[i] > T::zero() || self.diag[i] < off
        })
    }
}
