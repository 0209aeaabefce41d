use crate::discretization::OperatorStencil;
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::solver::{origin_increment, PriceSurface};

/// Worst discrete complementarity defect of one backward step.
///
/// The equation branch `L_h V - c` is divided by the diagonal of the step
/// matrix (`1/dt + theta A_ii`) so that all three branches of
/// `max(min(L_h V - c, V - gamma x), V - K)` are measured in cash.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplementarityResidual<T> {
    /// Step index `n`: the step from `t_{n+1}` to `t_n`.
    pub step: usize,
    pub max_abs: T,
    /// Spatial node of the worst value.
    pub location: usize,
}

/// Per-node residuals, one row per time slice. The terminal row holds
/// `|V - K|`.
pub fn nodewise_residuals<T: Scalar>(surface: &PriceSurface<T>) -> Vec<Vec<T>> {
    let params = surface.params();
    let grid = surface.grid();
    let stencil = OperatorStencil::assemble(params, grid, surface.epsilon());
    let nt = grid.nt();
    let nx = grid.nx();
    let face = params.face();
    let lower: Vec<T> = grid.x().iter().map(|&x| params.gamma() * x).collect();

    let mut rows = vec![vec![T::zero(); nx]; nt];
    rows[nt - 1] = surface
        .slice(nt - 1)
        .iter()
        .map(|&v| (v - face).abs())
        .collect();

    for n in 0..nt - 1 {
        let record = &surface.steps()[n];
        let dt = grid.dt(n);
        let later = surface.slice(n + 1);
        let earlier = surface.slice(n);
        let row = &mut rows[n];
        match &record.midpoint {
            Some(mid) => {
                let half = dt * T::lit(0.5);
                substep_defect(&stencil, params, T::one(), half, later, mid, &lower, row);
                substep_defect(&stencil, params, T::one(), half, mid, earlier, &lower, row);
            }
            None => {
                substep_defect(&stencil, params, record.theta, dt, later, earlier, &lower, row);
            }
        }
    }
    rows
}

#[allow(clippy::too_many_arguments)]
fn substep_defect<T: Scalar>(
    stencil: &OperatorStencil<T>,
    params: &ModelParams<T>,
    theta: T,
    dt: T,
    later: &[T],
    earlier: &[T],
    lower: &[T],
    out: &mut [T],
) {
    let nx = later.len();
    let face = params.face();
    let coupon = params.c();
    let a_later = stencil.apply(later);
    let a_earlier = stencil.apply(earlier);
    let first = if stencil.degenerate_origin() {
        let exact = origin_increment(params, later[0], dt);
        out[0] = out[0].max((earlier[0] - exact).abs());
        1
    } else {
        0
    };
    for i in first..nx - 1 {
        let operator = (earlier[i] - later[i]) / dt
            + theta * a_earlier[i]
            + (T::one() - theta) * a_later[i]
            - coupon;
        let scale = T::one() / dt + theta * stencil.diag()[i];
        let r = (operator / scale)
            .min(earlier[i] - lower[i])
            .max(earlier[i] - face)
            .abs();
        out[i] = out[i].max(r);
    }
    out[nx - 1] = out[nx - 1].max((earlier[nx - 1] - face).abs());
}

/// Recomputes the complementarity residual of every step from the stored
/// slices, independently of the solver loop.
pub fn residual_report<T: Scalar>(surface: &PriceSurface<T>) -> Vec<ComplementarityResidual<T>> {
    let rows = nodewise_residuals(surface);
    rows[..rows.len() - 1]
        .iter()
        .enumerate()
        .map(|(n, row)| {
            let (location, max_abs) = row
                .iter()
                .copied()
                .enumerate()
                .fold((0, T::zero()), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            ComplementarityResidual {
                step: n,
                max_abs,
                location,
            }
        })
        .collect()
}
