use serde::{Deserialize, Serialize};

use super::{spatial_apply, TransformedSurface};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Nodes per axis of the reference lattice over `Q_1 = (-1, 1) x (-1, 1)`.
pub const PATCH_NODES: usize = 33;

/// Units in which the unit cylinder is measured: `Q_s(y0, tau0)` is
/// `|y - y0| < s length`, `|tau - tau0| < s^2 time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicFrame<T> {
    pub length: T,
    pub time: T,
}

impl<T: Scalar> ParabolicFrame<T> {
    /// Raw coordinates (cash, years).
    pub fn unit() -> Self {
        Self {
            length: T::one(),
            time: T::one(),
        }
    }

    /// `length = K/gamma`, `time = 2/sigma^2`: the scales on which the
    /// diffusion coefficient of the transformed operator is of order one.
    pub fn natural(params: &ModelParams<T>) -> Self {
        Self {
            length: params.x_max(),
            time: T::lit(2.0) / (params.sigma() * params.sigma()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerKind {
    /// Largest sampled value of `u` on the cylinder.
    Sup,
    /// `s^2`.
    SSquared,
}

/// `v(Y, Theta) = u(y0 + s length Y, tau0 + s^2 time Theta) / A_s` on the
/// reference lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPatch<T> {
    pub center: (T, T),
    pub scale: T,
    pub frame: ParabolicFrame<T>,
    pub kind: NormalizerKind,
    pub normalizer: T,
    /// `values[k][j] = v(Y_j, Theta_k)` with `Y_j = -1 + j/16`, `Theta_k = -1 + k/16`.
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> RescaledPatch<T> {
    /// Lattice coordinate of index `j`.
    pub fn coordinate(j: usize) -> T {
        let half = T::from_count((PATCH_NODES - 1) / 2);
        T::from_count(j) / half - T::one()
    }

    pub fn step() -> T {
        T::lit(2.0) / T::from_count(PATCH_NODES - 1)
    }

    /// `v(0, 0)`.
    pub fn center_value(&self) -> T {
        let mid = (PATCH_NODES - 1) / 2;
        self.values[mid][mid]
    }

    pub fn max_value(&self) -> T {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    /// Physical `(y, tau)` of lattice node `(j, k)`.
    pub fn physical(&self, j: usize, k: usize) -> (T, T) {
        let s = self.scale;
        (
            self.center.0 + s * self.frame.length * Self::coordinate(j),
            self.center.1 + s * s * self.frame.time * Self::coordinate(k),
        )
    }
}

/// Samples `u` on the rescaled cylinder by bilinear interpolation.
pub fn rescale<T: Scalar>(
    ts: &TransformedSurface<T>,
    center: (T, T),
    s: T,
    kind: NormalizerKind,
    frame: ParabolicFrame<T>,
) -> Result<RescaledPatch<T>> {
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let half_y = s * frame.length;
    let half_t = s * s * frame.time;
    let grid = ts.grid();
    let slack = T::lit(1e-12);
    let (y0, t0) = center;
    let fits = y0 - half_y >= -slack * grid.x_max()
        && y0 + half_y <= grid.x_max() * (T::one() + slack)
        && t0 - half_t >= -slack * grid.horizon()
        && t0 + half_t <= grid.horizon() * (T::one() + slack);
    if !fits {
        return Err(Error::PatchOutOfDomain);
    }
    let mut patch = RescaledPatch {
        center,
        scale: s,
        frame,
        kind,
        normalizer: T::one(),
        values: vec![vec![T::zero(); PATCH_NODES]; PATCH_NODES],
    };
    for k in 0..PATCH_NODES {
        for j in 0..PATCH_NODES {
            let (y, tau) = patch.physical(j, k);
            patch.values[k][j] = ts.interpolate(y, tau);
        }
    }
    let normalizer = match kind {
        NormalizerKind::Sup => patch.max_value(),
        NormalizerKind::SSquared => s * s,
    };
    if !(normalizer > T::zero()) {
        return Err(Error::DegeneratePatch);
    }
    for value in patch.values.iter_mut().flatten() {
        *value = *value / normalizer;
    }
    patch.normalizer = normalizer;
    Ok(patch)
}

/// `L~ u` at mesh nodes: centred differences in `tau` and `y`. Boundary
/// nodes, where no centred stencil exists, hold NaN.
pub fn operator_field<T: Scalar>(ts: &TransformedSurface<T>) -> Vec<Vec<T>> {
    let grid = ts.grid();
    let ys = grid.x();
    let taus = grid.t();
    let (nx, nt) = (grid.nx(), grid.nt());
    let u = ts.u();
    let mut field = vec![vec![T::nan(); nx]; nt];
    for m in 1..nt - 1 {
        let span = taus[m + 1] - taus[m - 1];
        for j in 1..nx - 1 {
            let u_tau = (u[m + 1][j] - u[m - 1][j]) / span;
            field[m][j] = u_tau + spatial_apply(ts, &u[m], ys, j);
        }
    }
    field
}

/// The rescaled operator applied to the patch at interior lattice nodes
/// (NaN on the lattice boundary):
///
/// `v_Theta - 1/2 sigma^2 time (X - y)^2 / length^2 v_YY
///  + s time (r - q)(X - y) / length v_Y + s^2 time r v`.
pub fn scaled_operator_apply<T: Scalar>(
    patch: &RescaledPatch<T>,
    params: &ModelParams<T>,
) -> Vec<Vec<T>> {
    let d = RescaledPatch::<T>::step();
    let two = T::lit(2.0);
    let s = patch.scale;
    let frame = patch.frame;
    let v = &patch.values;
    let mut out = vec![vec![T::nan(); PATCH_NODES]; PATCH_NODES];
    for k in 1..PATCH_NODES - 1 {
        for j in 1..PATCH_NODES - 1 {
            let (y, _) = patch.physical(j, k);
            let dist = (params.x_max() - y) / frame.length;
            let v_theta = (v[k + 1][j] - v[k - 1][j]) / (two * d);
            let v_y = (v[k][j + 1] - v[k][j - 1]) / (two * d);
            let v_yy = (v[k][j + 1] - two * v[k][j] + v[k][j - 1]) / (d * d);
            out[k][j] = v_theta
                - T::lit(0.5) * params.sigma() * params.sigma() * frame.time * dist * dist * v_yy
                + s * frame.time * (params.r() - params.q()) * dist * v_y
                + s * s * frame.time * params.r() * v[k][j];
        }
    }
    out
}

/// Discrepancy between the two sides of the scaling identity
/// `L~_s v = (s^2 time / A_s) (L~ u)(y0 + s length Y, tau0 + s^2 time Theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingGap<T> {
    pub max_abs_gap: T,
    pub max_abs_rhs: T,
}

impl<T: Scalar> ScalingGap<T> {
    pub fn relative(&self) -> T {
        if self.max_abs_rhs > T::zero() {
            self.max_abs_gap / self.max_abs_rhs
        } else {
            self.max_abs_gap
        }
    }
}

/// Evaluates both sides of the scaling identity at interior lattice nodes;
/// the right side interpolates [`operator_field`] bilinearly.
pub fn scaling_identity_gap<T: Scalar>(
    ts: &TransformedSurface<T>,
    patch: &RescaledPatch<T>,
) -> ScalingGap<T> {
    let field = operator_field(ts);
    let grid = ts.grid();
    let lhs = scaled_operator_apply(patch, ts.params());
    let factor = patch.scale * patch.scale * patch.frame.time / patch.normalizer;
    let mut gap = ScalingGap {
        max_abs_gap: T::zero(),
        max_abs_rhs: T::zero(),
    };
    for k in 1..PATCH_NODES - 1 {
        for j in 1..PATCH_NODES - 1 {
            let (y, tau) = patch.physical(j, k);
            let (jj, wy) = super::bracket(grid.x(), y);
            let (mm, wt) = super::bracket(grid.t(), tau);
            let at = |m: usize, j: usize| field[m][j];
            let lo = at(mm, jj) + wy * (at(mm, jj + 1) - at(mm, jj));
            let hi = at(mm + 1, jj) + wy * (at(mm + 1, jj + 1) - at(mm + 1, jj));
            let rhs = factor * (lo + wt * (hi - lo));
            if !rhs.is_finite() {
                continue;
            }
            gap.max_abs_rhs = gap.max_abs_rhs.max(rhs.abs());
            gap.max_abs_gap = gap.max_abs_gap.max((lhs[k][j] - rhs).abs());
        }
    }
    gap
}
