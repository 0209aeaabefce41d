//! Reflected coordinates `y = K/gamma - x`, `tau = T - t`, the shifted
//! unknown `u = V~ + gamma y - K` (the distance to the conversion obstacle),
//! and parabolic rescalings of `u` around a point.
//!
//! In these coordinates the fixed boundary `x = K/gamma` becomes `y = 0`,
//! maturity becomes `tau = 0`, and `u` solves
//! `L~ u = (c - q(K - gamma y)) 1{u > 0}` with
//! `L~ = d/dtau - 1/2 sigma^2 (K/gamma - y)^2 d2/dy2 + (r - q)(K/gamma - y) d/dy + r`.

mod patch;

use crate::discretization::Grid;
use crate::fb::detection_threshold;
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::solver::PriceSurface;

pub use patch::{
    operator_field, rescale, scaled_operator_apply, scaling_identity_gap, NormalizerKind,
    ParabolicFrame, RescaledPatch, ScalingGap, PATCH_NODES,
};

/// `u` on the reflected mesh, `u[m][j] = u(y_j, tau_m)`.
#[derive(Debug, Clone)]
pub struct TransformedSurface<T> {
    u: Vec<Vec<T>>,
    reflected: Vec<Vec<T>>,
    grid: Grid<T>,
    source_grid: Grid<T>,
    params: ModelParams<T>,
    tol: T,
    delta_fb: T,
}

/// Reverses both axes of a value table. Applying it twice is the identity.
pub fn reflect_values<T: Copy>(values: &[Vec<T>]) -> Vec<Vec<T>> {
    values
        .iter()
        .rev()
        .map(|row| row.iter().rev().copied().collect())
        .collect()
}

/// Index reversal plus the affine shift to `u`; no interpolation.
pub fn to_transformed<T: Scalar>(surface: &PriceSurface<T>) -> TransformedSurface<T> {
    let params = *surface.params();
    let grid = surface.grid().reflected();
    let reflected = reflect_values(surface.values());
    let face = params.face();
    let gamma = params.gamma();
    let u = reflected
        .iter()
        .map(|row| {
            row.iter()
                .zip(grid.x())
                .map(|(&v, &y)| v + gamma * y - face)
                .collect()
        })
        .collect();
    TransformedSurface {
        u,
        reflected,
        grid,
        source_grid: surface.grid().clone(),
        delta_fb: detection_threshold(&params, surface.grid(), surface.tol()),
        params,
        tol: surface.tol(),
    }
}

/// Inverse of [`to_transformed`]: recovers the original values exactly.
pub fn from_transformed<T: Scalar>(ts: &TransformedSurface<T>) -> PriceSurface<T> {
    PriceSurface::from_values(ts.params, ts.source_grid.clone(), reflect_values(&ts.reflected))
        .expect("source grid and reflected values share a shape")
}

impl<T: Scalar> TransformedSurface<T> {
    /// Builds a transformed surface directly from `u` values on a reflected
    /// mesh (synthetic inputs for the diagnostics).
    pub fn from_u(params: ModelParams<T>, grid: Grid<T>, u: Vec<Vec<T>>, tol: T) -> Self {
        assert_eq!(u.len(), grid.nt());
        assert!(u.iter().all(|row| row.len() == grid.nx()));
        let face = params.face();
        let gamma = params.gamma();
        let reflected = u
            .iter()
            .map(|row| {
                row.iter()
                    .zip(grid.x())
                    .map(|(&w, &y)| w - gamma * y + face)
                    .collect()
            })
            .collect();
        let source_grid = grid.reflected();
        Self {
            delta_fb: detection_threshold(&params, &source_grid, tol),
            u,
            reflected,
            grid,
            source_grid,
            params,
            tol,
        }
    }

    pub fn u(&self) -> &[Vec<T>] {
        &self.u
    }
    /// `V~(y, tau) = V(K/gamma - y, T - tau)`.
    pub fn reflected(&self) -> &[Vec<T>] {
        &self.reflected
    }
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }
    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }
    pub fn tol(&self) -> T {
        self.tol
    }
    /// Positivity threshold shared with the free-boundary extractor.
    pub fn delta_fb(&self) -> T {
        self.delta_fb
    }

    /// Right-hand side `c - q(K - gamma y)` without the indicator.
    pub fn source(&self, j: usize) -> T {
        let p = &self.params;
        p.c() - p.q() * (p.face() - p.gamma() * self.grid.x()[j])
    }

    /// `1{u > delta_fb}`.
    pub fn positive(&self, m: usize, j: usize) -> bool {
        self.u[m][j] > self.delta_fb
    }

    /// Bilinear interpolation of `u` at `(y, tau)`; clamps to the mesh.
    pub fn interpolate(&self, y: T, tau: T) -> T {
        let ys = self.grid.x();
        let ts = self.grid.t();
        let (j, wy) = bracket(ys, y);
        let (m, wt) = bracket(ts, tau);
        let lo = self.u[m][j] + wy * (self.u[m][j + 1] - self.u[m][j]);
        let hi = self.u[m + 1][j] + wy * (self.u[m + 1][j + 1] - self.u[m + 1][j]);
        lo + wt * (hi - lo)
    }
}

/// Cell index and fractional offset of `v` in `nodes`, clamped.
pub(crate) fn bracket<T: Scalar>(nodes: &[T], v: T) -> (usize, T) {
    let last = nodes.len() - 1;
    let k = nodes.partition_point(|&n| n <= v).clamp(1, last) - 1;
    let w = ((v - nodes[k]) / (nodes[k + 1] - nodes[k]))
        .max(T::zero())
        .min(T::one());
    (k, w)
}

/// Worst defect of the transformed equation at interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedDefect<T> {
    /// `max |L~_h u - (c - q(K - gamma y)) 1{u > delta_fb}|` over nodes whose
    /// stencil lies entirely in `u > delta_fb` or entirely in `u <= 10 tol`.
    pub max_abs: T,
    /// `(m, j)` of the worst node.
    pub location: (usize, usize),
    /// Nodes skipped because their stencil touches the detection band
    /// `10 tol < u <= delta_fb` or mixes both sides of it.
    pub interface_nodes: usize,
    /// `min (L~_h u - (c - q(K - gamma y)))` over nodes whose whole stencil
    /// lies in `u <= 10 tol`; non-negative for a solution.
    pub exercise_min: Option<T>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Positive,
    Contact,
    Band,
}

/// Applies a discrete `L~` (backward difference in `tau`, central in `y`)
/// to `u` and compares with the indicator right-hand side.
///
/// Nodes with `u <= delta_fb` but clearly above solver noise sit in a band
/// of width `O(h^2)` around the free boundary where the indicator cannot tell
/// contact from continuation; stencils touching the band are excluded along
/// with stencils that straddle it.
///
/// The backward difference in time is deliberately one order below the
/// solver's default scheme, so the defect measures consistency rather than
/// reproducing the solver's own equations.
pub fn transformed_residual<T: Scalar>(ts: &TransformedSurface<T>, tau_min: T) -> TransformedDefect<T> {
    let grid = ts.grid();
    let ys = grid.x();
    let nx = grid.nx();
    let nt = grid.nt();
    let contact = T::lit(10.0) * ts.tol();
    let side = |m: usize, j: usize| {
        let u = ts.u[m][j];
        if u > ts.delta_fb {
            Side::Positive
        } else if u <= contact {
            Side::Contact
        } else {
            Side::Band
        }
    };
    let mut max_abs = T::zero();
    let mut location = (0, 0);
    let mut interface_nodes = 0;
    let mut exercise_min: Option<T> = None;
    for m in 1..nt {
        if grid.t()[m] < tau_min {
            continue;
        }
        let dtau = grid.t()[m] - grid.t()[m - 1];
        for j in 1..nx - 1 {
            let centre = side(m, j);
            let uniform = centre != Side::Band
                && [side(m, j - 1), side(m, j + 1), side(m - 1, j)]
                    .iter()
                    .all(|&s| s == centre);
            if !uniform {
                interface_nodes += 1;
                continue;
            }
            let lhs = (ts.u[m][j] - ts.u[m - 1][j]) / dtau + spatial_apply(ts, &ts.u[m], ys, j);
            let rhs = if centre == Side::Positive {
                ts.source(j)
            } else {
                let margin = lhs - ts.source(j);
                exercise_min = Some(exercise_min.map_or(margin, |e: T| e.min(margin)));
                T::zero()
            };
            let defect = (lhs - rhs).abs();
            if defect > max_abs {
                max_abs = defect;
                location = (m, j);
            }
        }
    }
    TransformedDefect {
        max_abs,
        location,
        interface_nodes,
        exercise_min,
    }
}

/// `(-1/2 sigma^2 (X - y)^2 d2/dy2 + (r - q)(X - y) d/dy + r) w` at node `j`.
pub(crate) fn spatial_apply<T: Scalar>(ts: &TransformedSurface<T>, w: &[T], ys: &[T], j: usize) -> T {
    let p = ts.params();
    let x_max = p.x_max();
    let hm = ys[j] - ys[j - 1];
    let hp = ys[j + 1] - ys[j];
    let span = hm + hp;
    let two = T::lit(2.0);
    let wyy = two * (hm * w[j + 1] - span * w[j] + hp * w[j - 1]) / (hm * hp * span);
    let wy = (hm * hm * w[j + 1] + (hp * hp - hm * hm) * w[j] - hp * hp * w[j - 1]) / (hm * hp * span);
    let dist = x_max - ys[j];
    -T::lit(0.5) * p.sigma() * p.sigma() * dist * dist * wyy + (p.r() - p.q()) * dist * wy + p.r() * w[j]
}
