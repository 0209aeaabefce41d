use serde::Serialize;

use super::{extract_free_boundary, FreeBoundaryCurve};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::PriceSurface;

/// The smallest resolved `m_k` must shrink at least this much under one
/// refinement.
pub const TANGENCY_SHRINK_RATIO: f64 = 0.8;

/// Relative drop required between consecutive samples to count as strictly
/// decreasing; absorbs interpolation noise on flat sequences.
const DECREASE_MARGIN: f64 = 0.01;

/// Detected points needed within `0.2 K/gamma` of the touching point.
const MIN_NEAR_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangencySample<T> {
    pub k: usize,
    /// `d_k = 0.2 (K/gamma) 2^-k`.
    pub d: T,
    /// Time at which `b(t) = K/gamma - d`.
    pub t: T,
    /// `d^2 / (t* - t)`.
    pub m: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyReport<T> {
    pub samples: Vec<TangencySample<T>>,
    /// `max_{i >= k} m_i`: a nonincreasing envelope of the samples.
    pub fitted_modulus: Vec<T>,
    /// The last three samples are strictly decreasing.
    pub eventually_decreasing: bool,
}

impl<T: Scalar> TangencyReport<T> {
    pub fn smallest_m(&self) -> Option<T> {
        self.samples.last().map(|s| s.m)
    }
}

/// Time at which the detected curve reaches `level`, by linear
/// interpolation between consecutive detected slices.
fn crossing_time<T: Scalar>(curve: &FreeBoundaryCurve<T>, level: T) -> Option<T> {
    let pts: Vec<(T, T)> = curve.detected().collect();
    pts.windows(2).find_map(|w| {
        let ((t0, b0), (t1, b1)) = (w[0], w[1]);
        if b0 <= level && level <= b1 && b1 > b0 {
            Some(t0 + (level - b0) / (b1 - b0) * (t1 - t0))
        } else if b0 == level {
            Some(t0)
        } else {
            None
        }
    })
}

/// Samples `m_k` at dyadic distances that the curve resolves: `d_k >= 2h`
/// and `K/gamma - d_k` inside the detected range with `t(d_k) < t*`.
pub fn tangency_samples<T: Scalar>(curve: &FreeBoundaryCurve<T>) -> Result<Vec<TangencySample<T>>> {
    let x_max = curve.x_max;
    let reach = T::lit(0.2) * x_max;
    let near = curve.detected().filter(|&(_, b)| x_max - b <= reach).count();
    if near < MIN_NEAR_POINTS {
        return Err(Error::InsufficientResolution(format!(
            "{near} free-boundary points within 0.2 K/gamma of the touching point, {MIN_NEAR_POINTS} required"
        )));
    }
    let floor = T::lit(2.0) * curve.h;
    let mut samples = Vec::new();
    for k in 0.. {
        let d = reach * T::lit(0.5).powi(k as i32);
        if d < floor {
            break;
        }
        let Some(t) = crossing_time(curve, x_max - d) else {
            continue;
        };
        if t < curve.t_star {
            samples.push(TangencySample {
                k,
                d,
                t,
                m: d * d / (curve.t_star - t),
            });
        }
    }
    Ok(samples)
}

/// Tabulates `m_k` and tests whether the sequence is eventually decreasing.
pub fn tangency_check<T: Scalar>(curve: &FreeBoundaryCurve<T>) -> Result<TangencyReport<T>> {
    let samples = tangency_samples(curve)?;
    if samples.len() < 3 {
        return Err(Error::InsufficientResolution(format!(
            "{} resolvable dyadic distances, 3 required",
            samples.len()
        )));
    }
    let mut fitted_modulus = vec![T::zero(); samples.len()];
    let mut running = T::zero();
    for (slot, s) in fitted_modulus.iter_mut().zip(&samples).rev() {
        running = running.max(s.m);
        *slot = running;
    }
    let keep = T::one() - T::lit(DECREASE_MARGIN);
    let tail = &samples[samples.len() - 3..];
    let eventually_decreasing = tail.windows(2).all(|w| w[1].m < w[0].m * keep);
    Ok(TangencyReport {
        samples,
        fitted_modulus,
        eventually_decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangencyComparison<T> {
    /// Smallest resolved `m` on the fine curve over that on the coarse one.
    pub ratio: T,
    pub coarse_decreasing: bool,
    pub fine_decreasing: bool,
}

impl<T: Scalar> TangencyComparison<T> {
    pub fn pass(&self) -> bool {
        self.fine_decreasing && self.ratio <= T::lit(TANGENCY_SHRINK_RATIO)
    }
}

pub fn compare_tangency<T: Scalar>(
    coarse: &TangencyReport<T>,
    fine: &TangencyReport<T>,
) -> TangencyComparison<T> {
    let ratio = match (coarse.smallest_m(), fine.smallest_m()) {
        (Some(c), Some(f)) if c > T::zero() => f / c,
        _ => T::infinity(),
    };
    TangencyComparison {
        ratio,
        coarse_decreasing: coarse.eventually_decreasing,
        fine_decreasing: fine.eventually_decreasing,
    }
}

/// Measurements around the touching time; reported, never judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TStarGapReport<T> {
    pub t_star: T,
    /// `T - t*`.
    pub gap: T,
    /// `(T - t*) / dt`.
    pub gap_in_steps: T,
    /// `max |V_x(t) - V_x(t')| / |t - t'|^(1/2)` of the one-sided slope at
    /// `K/gamma`.
    pub holder_quotient: T,
    /// One-sided `V_x(K/gamma, T)`; zero for the flat terminal slice.
    pub vx_at_maturity: T,
    /// `max |V_x(K/gamma, t) - gamma|` over slices with `t <= t*`.
    pub vx_deviation_before_t_star: T,
}

pub fn t_star_gap_report<T: Scalar>(surface: &PriceSurface<T>) -> Result<TStarGapReport<T>> {
    let curve = extract_free_boundary(surface)?;
    let grid = surface.grid();
    let nx = grid.nx();
    let h = grid.dx(nx - 2);
    let vx: Vec<T> = surface
        .values()
        .iter()
        .map(|row| (row[nx - 1] - row[nx - 2]) / h)
        .collect();
    let ts = grid.t();
    let mut holder_quotient = T::zero();
    for a in 0..vx.len() {
        for b in a + 1..vx.len() {
            let q = (vx[b] - vx[a]).abs() / (ts[b] - ts[a]).sqrt();
            holder_quotient = holder_quotient.max(q);
        }
    }
    let gamma = surface.params().gamma();
    let vx_deviation_before_t_star = vx
        .iter()
        .zip(ts)
        .filter(|(_, &t)| t <= curve.t_star)
        .map(|(&v, _)| (v - gamma).abs())
        .fold(T::zero(), T::max);
    let gap = grid.horizon() - curve.t_star;
    Ok(TStarGapReport {
        t_star: curve.t_star,
        gap,
        gap_in_steps: gap / curve.dt,
        holder_quotient,
        vx_at_maturity: vx[vx.len() - 1],
        vx_deviation_before_t_star,
    })
}
