//! Free-boundary extraction and the quantitative estimates measured on it:
//! lower bound, touching time, non-degeneracy, quadratic growth, dyadic
//! doubling and parabolic tangency at the fixed boundary.

mod growth;
mod tangency;

use serde::Serialize;

use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::solver::PriceSurface;

pub use growth::{
    doubling_check, doubling_table, non_degeneracy_check, quadratic_growth_check, DoublingReport,
    DoublingRow, GrowthReport, NonDegeneracyReport, stable, boundary_neighbours, STABILITY_FACTOR,
};
pub use tangency::{
    compare_tangency, t_star_gap_report, tangency_check, tangency_samples, TStarGapReport,
    TangencyComparison, TangencyReport, TangencySample, TANGENCY_SHRINK_RATIO,
};

/// Safety factor `kappa` in the detection threshold.
pub const DETECTION_SAFETY: f64 = 5.0;

/// Threshold below which `V - gamma x` counts as zero:
/// `max(10 tol, kappa gamma^2 h^2 / K)` with `h` the largest spatial step.
///
/// `gamma^2 h^2 / K` is the size of a quadratic detachment `u ~ d^2` one cell
/// away from the free boundary, measured on the natural scales `K/gamma`
/// (length) and `K` (value).
pub fn detection_threshold<T: Scalar>(params: &ModelParams<T>, grid: &Grid<T>, tol: T) -> T {
    let h = grid.max_dx();
    let g = params.gamma();
    (T::lit(10.0) * tol).max(T::lit(DETECTION_SAFETY) * g * g * h * h / params.face())
}

/// One time slice of the detected boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint<T> {
    pub t: T,
    /// Interpolated `b(t)`, absent when the slice has no exercise node.
    pub b: Option<T>,
    /// First node with `V - gamma x <= delta_fb`.
    pub index: Option<usize>,
    /// Whether every node from `index` up to `K/gamma` is in the exercise set.
    pub contiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundaryCurve<T> {
    /// One entry per time slice, `t` increasing.
    pub points: Vec<BoundaryPoint<T>>,
    /// Interpolated last time with a nonempty exercise set.
    pub t_star: T,
    pub delta_fb: T,
    /// Largest spatial step of the source grid.
    pub h: T,
    /// Step of the source time grid around `t_star`.
    pub dt: T,
    pub x_max: T,
    pub maturity: T,
}

impl<T: Scalar> FreeBoundaryCurve<T> {
    /// Builds a curve from given `(t, b)` points (synthetic or external
    /// data). Every point is treated as detected.
    pub fn from_points(points: &[(T, T)], t_star: T, x_max: T, maturity: T, h: T) -> Self {
        let dt = points
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(T::zero(), T::max);
        Self {
            points: points
                .iter()
                .map(|&(t, b)| BoundaryPoint {
                    t,
                    b: Some(b),
                    index: None,
                    contiguous: true,
                })
                .collect(),
            t_star,
            delta_fb: T::zero(),
            h,
            dt,
            x_max,
            maturity,
        }
    }

    /// Detected `(t, b)` pairs in time order.
    pub fn detected(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.points.iter().filter_map(|p| p.b.map(|b| (p.t, b)))
    }

    pub fn detected_count(&self) -> usize {
        self.detected().count()
    }

    /// `min (b - c/(q gamma))` over detected points.
    pub fn lower_bound_margin(&self, params: &ModelParams<T>) -> T {
        let bound = params.exercise_lower_bound();
        self.detected()
            .map(|(_, b)| b - bound)
            .fold(T::infinity(), T::min)
    }

    /// Largest backward move `max(b_n - b_{n+1})` between consecutive
    /// detected slices (zero for a nondecreasing curve).
    pub fn largest_retreat(&self) -> T {
        let b: Vec<T> = self.detected().map(|(_, b)| b).collect();
        b.windows(2)
            .map(|w| w[0] - w[1])
            .fold(T::zero(), T::max)
    }

    /// Largest `|b_{n+1} - b_n|` between consecutive detected slices.
    pub fn largest_jump(&self) -> T {
        let b: Vec<T> = self.detected().map(|(_, b)| b).collect();
        b.windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(T::zero(), T::max)
    }

    /// Every exercise set is an interval ending at `K/gamma`.
    pub fn is_epigraph(&self) -> bool {
        self.points.iter().all(|p| p.contiguous)
    }

    /// Start indices never decrease as `t` grows: the exercise region only
    /// shrinks toward `K/gamma`.
    pub fn nested_in_time(&self) -> bool {
        let idx: Vec<usize> = self.points.iter().filter_map(|p| p.index).collect();
        idx.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Detects the free boundary with the default threshold.
pub fn extract_free_boundary<T: Scalar>(surface: &PriceSurface<T>) -> Result<FreeBoundaryCurve<T>> {
    let delta = detection_threshold(surface.params(), surface.grid(), surface.tol());
    extract_with_threshold(surface, delta)
}

/// Detects the free boundary treating `V - gamma x <= delta` as exercise.
///
/// The node at `x = K/gamma` always sits on both obstacles and is ignored.
pub fn extract_with_threshold<T: Scalar>(
    surface: &PriceSurface<T>,
    delta: T,
) -> Result<FreeBoundaryCurve<T>> {
    let grid = surface.grid();
    let xs = grid.x();
    let nx = grid.nx();
    let nt = grid.nt();
    let last_interior = nx - 2;

    let mut points = Vec::with_capacity(nt);
    for n in 0..nt {
        let gap = |i: usize| surface.obstacle_gap(n, i);
        let first = (0..=last_interior).find(|&i| gap(i) <= delta);
        let (b, contiguous) = match first {
            None => (None, true),
            Some(i) => {
                let b = if i == 0 {
                    xs[0]
                } else {
                    let (g0, g1) = (gap(i - 1), gap(i));
                    let w = ((g0 - delta) / (g0 - g1)).max(T::zero()).min(T::one());
                    xs[i - 1] + w * (xs[i] - xs[i - 1])
                };
                (Some(b), (i..=last_interior).all(|k| gap(k) <= delta))
            }
        };
        points.push(BoundaryPoint {
            t: grid.t()[n],
            b,
            index: first,
            contiguous,
        });
    }

    let n_last = points
        .iter()
        .rposition(|p| p.b.is_some())
        .ok_or(Error::EmptyExerciseRegion)?;
    let t_star = if n_last + 1 < nt {
        // Interpolate the gap at the last interior node across the switch.
        let g0 = surface.obstacle_gap(n_last, last_interior);
        let g1 = surface.obstacle_gap(n_last + 1, last_interior);
        let w = if g1 > g0 {
            ((delta - g0) / (g1 - g0)).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        grid.t()[n_last] + w * grid.dt(n_last)
    } else {
        grid.horizon()
    };
    let dt = grid.dt(n_last.min(nt - 2));

    Ok(FreeBoundaryCurve {
        points,
        t_star,
        delta_fb: delta,
        h: grid.max_dx(),
        dt,
        x_max: grid.x_max(),
        maturity: grid.horizon(),
    })
}

/// Largest move of `b_n`, in grid cells, when the threshold is halved.
pub fn detection_stability<T: Scalar>(surface: &PriceSurface<T>) -> Result<T> {
    let base = extract_free_boundary(surface)?;
    let halved = extract_with_threshold(surface, base.delta_fb * T::lit(0.5))?;
    let mut worst = T::zero();
    for (a, b) in base.points.iter().zip(&halved.points) {
        match (a.b, b.b) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs() / base.h),
            (None, None) => {}
            // A slice that gains or loses its exercise set sits next to
            // `K/gamma`; count it as the distance to the fixed boundary.
            (Some(x), None) | (None, Some(x)) => worst = worst.max((base.x_max - x) / base.h),
        }
    }
    Ok(worst)
}
