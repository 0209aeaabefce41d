use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::PriceSurface;

/// Required shrink factor of both measures under one refinement.
pub const REGULARITY_SHRINK_RATIO: f64 = 0.75;

/// Near-origin size of `x^2 V_xx` and `x V_x`, maximised over time at the
/// first three interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRegularity<T> {
    pub max_x2_vxx: T,
    pub max_x_vx: T,
    /// Spatial step next to the origin.
    pub h: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityComparison {
    pub ratio_x2_vxx: f64,
    pub ratio_x_vx: f64,
    pub pass: bool,
}

const PROBE_NODES: usize = 3;
const MIN_NEAR_ORIGIN: usize = 5;

/// Measures how fast `x^2 V_xx` and `x V_x` vanish at the degenerate edge.
pub fn boundary_regularity_check<T: Scalar>(surface: &PriceSurface<T>) -> Result<BoundaryRegularity<T>> {
    let grid = surface.grid();
    let x = grid.x();
    let limit = T::lit(0.1) * grid.x_max();
    let near = x.iter().filter(|&&xi| xi < limit).count();
    if near < MIN_NEAR_ORIGIN {
        return Err(Error::InsufficientResolution(format!(
            "{near} nodes in x < 0.1 K/gamma, need {MIN_NEAR_ORIGIN}"
        )));
    }
    let two = T::lit(2.0);
    let mut max_x2_vxx = T::zero();
    let mut max_x_vx = T::zero();
    for row in surface.values() {
        for i in 1..=PROBE_NODES {
            let hm = x[i] - x[i - 1];
            let hp = x[i + 1] - x[i];
            let span = hm + hp;
            let vxx = two * (hm * row[i + 1] - span * row[i] + hp * row[i - 1]) / (hm * hp * span);
            let vx = (hm * hm * row[i + 1] + (hp * hp - hm * hm) * row[i] - hp * hp * row[i - 1])
                / (hm * hp * span);
            max_x2_vxx = max_x2_vxx.max((x[i] * x[i] * vxx).abs());
            max_x_vx = max_x_vx.max((x[i] * vx).abs());
        }
    }
    Ok(BoundaryRegularity {
        max_x2_vxx,
        max_x_vx,
        h: grid.dx(0),
    })
}

fn ratio(fine: f64, coarse: f64) -> f64 {
    if fine == 0.0 && coarse == 0.0 {
        0.0
    } else {
        fine / coarse
    }
}

/// Passes when both measures shrink by at least [`REGULARITY_SHRINK_RATIO`]
/// from the coarse to the fine surface.
pub fn compare_regularity<T: Scalar>(
    coarse: &BoundaryRegularity<T>,
    fine: &BoundaryRegularity<T>,
) -> RegularityComparison {
    let ratio_x2_vxx = ratio(fine.max_x2_vxx.as_f64(), coarse.max_x2_vxx.as_f64());
    let ratio_x_vx = ratio(fine.max_x_vx.as_f64(), coarse.max_x_vx.as_f64());
    RegularityComparison {
        ratio_x2_vxx,
        ratio_x_vx,
        pass: ratio_x2_vxx <= REGULARITY_SHRINK_RATIO && ratio_x_vx <= REGULARITY_SHRINK_RATIO,
    }
}
