use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::transforms::{ParabolicFrame, TransformedSurface};

/// Two measurements of the same constant agree if their ratio lies in
/// `[1/STABILITY_FACTOR, STABILITY_FACTOR]`.
pub const STABILITY_FACTOR: f64 = 2.0;

/// Smallest cylinder half-width, in cells.
const MIN_CELLS: f64 = 4.0;

/// Number of coarse rows of the doubling table used to calibrate `C_1`.
const CALIBRATION_ROWS: usize = 2;

/// Minimum log-log slope of `sup u` against `rho` accepted as quadratic.
const QUADRATIC_SLOPE: f64 = 1.5;

pub fn stable<T: Scalar>(a: T, b: T) -> bool {
    let f = T::lit(STABILITY_FACTOR);
    a > T::zero() && b > T::zero() && a / b <= f && b / a <= f
}

/// Dyadic radii `2^-k` (natural units), `k >= first`, down to `MIN_CELLS`
/// cells of the mesh.
fn dyadic_radii<T: Scalar>(ts: &TransformedSurface<T>, frame: &ParabolicFrame<T>, first: i32) -> Vec<(i32, T)> {
    let floor = T::lit(MIN_CELLS) * ts.grid().max_dx() / frame.length;
    (first..60)
        .map(|k| (k, T::lit(0.5).powi(k)))
        .take_while(|&(_, rho)| rho >= floor)
        .collect()
}

/// `sup u` over nodes of `{|y - y0| <= rho length} x [tau0 - rho^2 time, tau0 + ahead]`.
///
/// `ahead` is `0` for the lower half-cylinder and `rho^2 time` for the full
/// one. With `clip` the cylinder is intersected with the domain, otherwise
/// `None` is returned when it does not fit.
fn cylinder_sup<T: Scalar>(
    ts: &TransformedSurface<T>,
    frame: &ParabolicFrame<T>,
    center: (T, T),
    rho: T,
    full: bool,
    clip: bool,
) -> Option<T> {
    let grid = ts.grid();
    let half_y = rho * frame.length;
    let half_t = rho * rho * frame.time;
    let (y0, t0) = center;
    let (y_lo, y_hi) = (y0 - half_y, y0 + half_y);
    let t_lo = t0 - half_t;
    let t_hi = if full { t0 + half_t } else { t0 };
    let eps = T::lit(1e-9);
    if !clip
        && (y_lo < -eps * grid.x_max()
            || y_hi > grid.x_max() * (T::one() + eps)
            || t_lo < -eps * grid.horizon()
            || t_hi > grid.horizon() * (T::one() + eps))
    {
        return None;
    }
    let slack_y = eps * grid.x_max();
    let slack_t = eps * grid.horizon();
    let j_range = grid.x().partition_point(|&y| y < y_lo - slack_y)
        ..grid.x().partition_point(|&y| y <= y_hi + slack_y);
    let m_range = grid.t().partition_point(|&t| t < t_lo - slack_t)
        ..grid.t().partition_point(|&t| t <= t_hi + slack_t);
    let u = ts.u();
    let mut sup: Option<T> = None;
    for m in m_range {
        for j in j_range.clone() {
            sup = Some(sup.map_or(u[m][j], |s: T| s.max(u[m][j])));
        }
    }
    sup
}

/// Positive-set nodes adjacent to the free boundary, one per `tau` slice
/// with an exercise set: `(y, tau, u)`.
///
/// Exercise nodes form the run `1..=J` of nodes with `u <= delta_fb`
/// starting next to `y = 0`; the returned node is `J + 1`.
pub fn boundary_neighbours<T: Scalar>(ts: &TransformedSurface<T>) -> Vec<(T, T, T)> {
    let grid = ts.grid();
    let nx = grid.nx();
    let mut out = Vec::new();
    for m in 0..grid.nt() {
        if ts.positive(m, 1) {
            continue;
        }
        let j = (1..nx).find(|&j| ts.positive(m, j));
        if let Some(j) = j {
            out.push((grid.x()[j], grid.t()[m], ts.u()[m][j]));
        }
    }
    out
}

/// Last exercise node of each slice (the discrete free boundary) in
/// transformed coordinates.
fn boundary_nodes<T: Scalar>(ts: &TransformedSurface<T>) -> Vec<(T, T)> {
    let grid = ts.grid();
    let mut out = Vec::new();
    for m in 0..grid.nt() {
        if ts.positive(m, 1) {
            continue;
        }
        let j = (1..grid.nx()).find(|&j| ts.positive(m, j)).unwrap_or(grid.nx()) - 1;
        out.push((grid.x()[j], grid.t()[m]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonDegeneracyReport<T> {
    /// `min (sup_{Q-_rho} u - u(X0)) / rho^2` over retained samples and radii.
    pub c0: T,
    pub samples: usize,
    pub evaluations: usize,
    /// Radius/sample pairs skipped because `sup u < 10 delta_fb`.
    pub guarded: usize,
}

/// Measures the non-degeneracy constant on lower half-cylinders centred at
/// positive-set nodes next to the free boundary.
///
/// Radii are dyadic in natural units, from `1/2` down to four cells. Every
/// radius is at least twice the distance from the centre to the boundary,
/// so each cylinder reaches into the exercise region.
pub fn non_degeneracy_check<T: Scalar>(
    ts: &TransformedSurface<T>,
    sample_count: usize,
) -> Result<NonDegeneracyReport<T>> {
    let frame = ParabolicFrame::natural(ts.params());
    let radii = dyadic_radii(ts, &frame, 1);
    let candidates = boundary_neighbours(ts);
    let guard = T::lit(10.0) * ts.delta_fb();

    let mut usable = Vec::new();
    for &(y, tau, u0) in &candidates {
        let ratios: Vec<Option<T>> = radii
            .iter()
            .map(|&(_, rho)| {
                let sup = cylinder_sup(ts, &frame, (y, tau), rho, false, false)?;
                Some(if sup < guard { None } else { Some((sup - u0) / (rho * rho)) })
            })
            .map(|r| r.flatten())
            .collect();
        if ratios.iter().any(Option::is_some) {
            usable.push(ratios);
        }
    }
    if usable.len() < sample_count {
        return Err(Error::InsufficientSamples {
            found: usable.len(),
            required: sample_count,
        });
    }
    // Spread the retained samples evenly over the boundary.
    let picked: Vec<&Vec<Option<T>>> = if sample_count == 0 {
        usable.iter().collect()
    } else {
        (0..sample_count)
            .map(|k| &usable[k * (usable.len() - 1) / (sample_count - 1).max(1)])
            .collect()
    };
    let mut c0 = T::infinity();
    let mut evaluations = 0;
    let mut guarded = 0;
    for ratios in picked {
        for r in ratios {
            match r {
                Some(v) => {
                    c0 = c0.min(*v);
                    evaluations += 1;
                }
                None => guarded += 1,
            }
        }
    }
    Ok(NonDegeneracyReport {
        c0,
        samples: sample_count.max(1).min(usable.len()),
        evaluations,
        guarded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport<T> {
    /// `max sup_{Q'_rho} u / rho^2` over samples and radii.
    pub c0: T,
    /// Smallest least-squares slope of `log sup u` against `log rho` over
    /// samples (absent when no sample has two resolved radii).
    pub min_slope: Option<T>,
    pub samples: usize,
    /// `(rho, sup u)` at the first sample (the touching point).
    pub touching_profile: Vec<(T, T)>,
}

impl<T: Scalar> GrowthReport<T> {
    /// Growth is no faster than quadratic near the boundary.
    pub fn quadratic(&self) -> bool {
        self.min_slope.map_or(true, |s| s >= T::lit(QUADRATIC_SLOPE))
    }
}

/// Measures `sup_{Q'_rho(X0)} u <= C_0 rho^2` at the touching point
/// `(0, T - t*)` and at every detected free-boundary node.
///
/// `Q'` is the full cylinder intersected with the domain; radii run from
/// `1/4` (natural units) down to four cells.
pub fn quadratic_growth_check<T: Scalar>(ts: &TransformedSurface<T>, touching_tau: T) -> GrowthReport<T> {
    let frame = ParabolicFrame::natural(ts.params());
    let radii = dyadic_radii(ts, &frame, 2);
    let guard = T::lit(10.0) * ts.delta_fb();
    let mut centers = vec![(T::zero(), touching_tau)];
    centers.extend(boundary_nodes(ts));

    let mut c0 = T::zero();
    let mut min_slope: Option<T> = None;
    let mut touching_profile = Vec::new();
    for (k, &center) in centers.iter().enumerate() {
        let mut logs = Vec::new();
        for &(_, rho) in &radii {
            let Some(sup) = cylinder_sup(ts, &frame, center, rho, true, true) else {
                continue;
            };
            let sup = sup.max(T::zero());
            c0 = c0.max(sup / (rho * rho));
            if k == 0 {
                touching_profile.push((rho, sup));
            }
            if sup >= guard {
                logs.push((rho.ln(), sup.ln()));
            }
        }
        if let Some(s) = slope(&logs) {
            min_slope = Some(min_slope.map_or(s, |m: T| m.min(s)));
        }
    }
    GrowthReport {
        c0,
        min_slope,
        samples: centers.len(),
        touching_profile,
    }
}

fn slope<T: Scalar>(points: &[(T, T)]) -> Option<T> {
    if points.len() < 2 {
        return None;
    }
    let n = T::from_count(points.len());
    let mx = points.iter().map(|p| p.0).fold(T::zero(), |a, b| a + b) / n;
    let my = points.iter().map(|p| p.1).fold(T::zero(), |a, b| a + b) / n;
    let sxy = points
        .iter()
        .fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let sxx = points.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    Some(sxy / sxx)
}

/// `S_j = sup_{Q'_{2^-j}(X0)} u` for `j = 1, 2, ...` down to four cells.
pub fn doubling_table<T: Scalar>(ts: &TransformedSurface<T>, center: (T, T)) -> Vec<T> {
    let frame = ParabolicFrame::natural(ts.params());
    dyadic_radii(ts, &frame, 1)
        .iter()
        .filter_map(|&(_, rho)| cylinder_sup(ts, &frame, center, rho, true, true))
        .map(|s| s.max(T::zero()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingRow<T> {
    /// `S_{j+1}` is checked; `j` starts at 1.
    pub j: usize,
    pub s_next: T,
    /// `max{4^-j C_1, 4^-1 S_j, ..., 4^-j S_1}`.
    pub bound: T,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport<T> {
    /// `S_1, S_2, ...`.
    pub table: Vec<T>,
    /// `max_{j <= 2} 4^j S_{j+1}`.
    pub c1: T,
    pub rows: Vec<DoublingRow<T>>,
    /// `S_j` is nonincreasing.
    pub nested: bool,
}

impl<T: Scalar> DoublingReport<T> {
    /// The inequality holds on every row beyond the calibration rows.
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Checks `S_{j+1} <= max{4^-j C_1, 4^-1 S_j, 4^-2 S_{j-1}, ..., 4^-j S_1}`.
///
/// `C_1` is calibrated on the two coarsest rows, so those rows hold by
/// construction and the finer rows carry the test. Needs at least four
/// entries.
pub fn doubling_check<T: Scalar>(table: &[T]) -> Result<DoublingReport<T>> {
    let needed = CALIBRATION_ROWS + 2;
    if table.len() < needed {
        return Err(Error::InsufficientResolution(format!(
            "doubling table has {} dyadic levels, {needed} required",
            table.len()
        )));
    }
    let quarter = T::lit(0.25);
    let c1 = (1..=CALIBRATION_ROWS)
        .map(|j| table[j] / quarter.powi(j as i32))
        .fold(T::zero(), T::max);
    let slack = T::one() + T::lit(1e-9);
    let rows = (CALIBRATION_ROWS + 1..table.len())
        .map(|j| {
            // table[j] is S_{j+1}; table[i - 1] is S_i.
            let s_next = table[j];
            let bound = (1..=j)
                .map(|i| quarter.powi((j + 1 - i) as i32) * table[i - 1])
                .fold(quarter.powi(j as i32) * c1, T::max);
            DoublingRow {
                j,
                s_next,
                bound,
                holds: s_next <= bound * slack,
            }
        })
        .collect();
    Ok(DoublingReport {
        table: table.to_vec(),
        c1,
        rows,
        nested: table.windows(2).all(|w| w[1] <= w[0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_violates_doubling() {
        let table: Vec<f64> = (1..=8).map(|j| 0.5f64.powi(j)).collect();
        let report = doubling_check(&table).unwrap();
        assert!(report.nested);
        assert!(!report.holds());
    }

    #[test]
    fn quadratic_decay_satisfies_doubling() {
        let table: Vec<f64> = (1..=8).map(|j| 3.0 * 0.25f64.powi(j)).collect();
        assert!(doubling_check(&table).unwrap().holds());
        let faster: Vec<f64> = (1..=8).map(|j| 0.125f64.powi(j)).collect();
        assert!(doubling_check(&faster).unwrap().holds());
    }

    #[test]
    fn short_tables_are_rejected() {
        assert!(matches!(
            doubling_check(&[1.0, 0.25, 0.06]),
            Err(Error::InsufficientResolution(_))
        ));
    }

    #[test]
    fn stability_is_symmetric() {
        assert!(stable(1.0, 1.9));
        assert!(stable(1.9, 1.0));
        assert!(!stable(1.0, 2.1));
        assert!(!stable(0.0, 0.0));
    }
}
