use crate::scalar::Scalar;
use crate::solver::PriceSurface;

/// Discrete monotonicity in `t` and slope bounds in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport<T> {
    /// `min V[n+1][i] - V[n][i]` over all nodes.
    pub min_time_increment: T,
    /// Node `(n, i)` attaining `min_time_increment`.
    pub time_location: (usize, usize),
    /// Extremes of `(V[n][i+1] - V[n][i]) / dx_i`.
    pub min_slope: T,
    pub max_slope: T,
    pub slope_location: (usize, usize),
}

impl<T: Scalar> MonotonicityReport<T> {
    /// `V_t >= 0` up to `time_slack` (cash per step) and
    /// `-slope_slack <= V_x <= gamma + slope_slack`.
    pub fn holds(&self, gamma: T, time_slack: T, slope_slack: T) -> bool {
        self.min_time_increment >= -time_slack
            && self.min_slope >= -slope_slack
            && self.max_slope <= gamma + slope_slack
    }
}

pub fn monotonicity_report<T: Scalar>(surface: &PriceSurface<T>) -> MonotonicityReport<T> {
    let grid = surface.grid();
    let values = surface.values();
    let mut min_time_increment = T::infinity();
    let mut time_location = (0, 0);
    for n in 0..grid.nt() - 1 {
        for (i, (&later, &earlier)) in values[n + 1].iter().zip(&values[n]).enumerate() {
            let inc = later - earlier;
            if inc < min_time_increment {
                min_time_increment = inc;
                time_location = (n, i);
            }
        }
    }
    let mut min_slope = T::infinity();
    let mut max_slope = T::neg_infinity();
    let mut slope_location = (0, 0);
    let gamma = surface.params().gamma();
    let mut worst = T::neg_infinity();
    for (n, row) in values.iter().enumerate() {
        for i in 0..grid.nx() - 1 {
            let slope = (row[i + 1] - row[i]) / grid.dx(i);
            min_slope = min_slope.min(slope);
            max_slope = max_slope.max(slope);
            let excess = (-slope).max(slope - gamma);
            if excess > worst {
                worst = excess;
                slope_location = (n, i);
            }
        }
    }
    MonotonicityReport {
        min_time_increment,
        time_location,
        min_slope,
        max_slope,
        slope_location,
    }
}

/// Obstacle bounds `gamma x <= V <= K` and strictness of the upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport<T> {
    /// `max (gamma x - V)`, positive when the lower obstacle is violated.
    pub lower_excess: T,
    /// `max (V - K)` over all nodes.
    pub upper_excess: T,
    /// `max (V - K)` over interior nodes (`x < K/gamma`) with `t < T`;
    /// negative when the call barrier is never reached.
    pub interior_upper_gap: T,
    /// `K - V(0, T - dt)` on the last step before maturity.
    pub origin_gap_last_step: T,
    /// `(rK - c) dt e^{-rT} / 2`, the lower bound expected for
    /// `origin_gap_last_step`.
    pub origin_gap_floor: T,
}

impl<T: Scalar> BoundsReport<T> {
    pub fn holds(&self, slack: T) -> bool {
        self.lower_excess <= slack
            && self.upper_excess <= slack
            && self.interior_upper_gap < T::zero()
            && self.origin_gap_last_step >= self.origin_gap_floor
    }
}

pub fn bounds_report<T: Scalar>(surface: &PriceSurface<T>) -> BoundsReport<T> {
    let params = surface.params();
    let grid = surface.grid();
    let face = params.face();
    let nt = grid.nt();
    let nx = grid.nx();
    let mut lower_excess = T::neg_infinity();
    let mut upper_excess = T::neg_infinity();
    let mut interior_upper_gap = T::neg_infinity();
    for (n, row) in surface.values().iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            lower_excess = lower_excess.max(params.gamma() * grid.x()[i] - v);
            upper_excess = upper_excess.max(v - face);
            if n < nt - 1 && i < nx - 1 {
                interior_upper_gap = interior_upper_gap.max(v - face);
            }
        }
    }
    let dt = grid.dt(nt - 2);
    let origin_gap_last_step = face - surface.value(nt - 2, 0);
    let origin_gap_floor = (params.r() * face - params.c()) * dt * (-params.r() * params.maturity()).exp()
        / T::lit(2.0);
    BoundsReport {
        lower_excess,
        upper_excess,
        interior_upper_gap,
        origin_gap_last_step,
        origin_gap_floor,
    }
}
