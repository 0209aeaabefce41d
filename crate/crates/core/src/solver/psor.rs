use crate::discretization::OperatorStencil;
use crate::error::Error;
use crate::scalar::Scalar;

/// Relaxation factor for projected SOR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relaxation {
    Fixed(f64),
    /// `2 / (1 + sqrt(1 - rho^2))` with `rho` the largest Jacobi row ratio of
    /// the step matrix, clamped to `[1, 1.95]`.
    Tuned,
}

impl Default for Relaxation {
    fn default() -> Self {
        Relaxation::Tuned
    }
}

pub(crate) struct StepProblem<'a, T> {
    pub stencil: &'a OperatorStencil<T>,
    pub theta: T,
    pub dt: T,
    pub coupon: T,
    pub lower: &'a [T],
    pub upper: T,
    /// Value imposed at row 0 when the origin row is decoupled.
    pub origin: Option<T>,
}

pub(crate) struct StepOutcome<T> {
    pub iterations: usize,
    pub residual: T,
    pub location: usize,
}

pub(crate) struct PsorSettings<T> {
    pub relaxation: Relaxation,
    pub tol: T,
    pub max_iter: usize,
}

/// Solves one backward step of the discrete obstacle problem
///
/// `(I + theta dt A) v = (I - (1 - theta) dt A) v_next + c dt`,
/// `lower <= v <= upper`, in complementarity form,
///
/// by projected SOR, warm-started from `v_next`. `v` receives the result.
pub(crate) fn solve_step<T: Scalar>(
    problem: &StepProblem<'_, T>,
    settings: &PsorSettings<T>,
    v_next: &[T],
    v: &mut Vec<T>,
) -> std::result::Result<StepOutcome<T>, (usize, T)> {
    let s = problem.stencil;
    let n = s.len();
    let last = n - 1;
    let explicit = (T::one() - problem.theta) * problem.dt;
    let implicit = problem.theta * problem.dt;
    let first = if problem.origin.is_some() { 1 } else { 0 };

    let mut rhs = vec![T::zero(); n];
    let mut m_sub = vec![T::zero(); n];
    let mut m_diag = vec![T::one(); n];
    let mut m_sup = vec![T::zero(); n];
    for i in first..last {
        let applied = if explicit > T::zero() {
            s.apply_row(v_next, i)
        } else {
            T::zero()
        };
        rhs[i] = v_next[i] - explicit * applied + problem.coupon * problem.dt;
        m_sub[i] = implicit * s.sub()[i];
        m_diag[i] = T::one() + implicit * s.diag()[i];
        m_sup[i] = implicit * s.sup()[i];
    }

    let omega = match settings.relaxation {
        Relaxation::Fixed(w) => T::lit(w),
        Relaxation::Tuned => {
            let rho = (first..last)
                .map(|i| (m_sub[i].abs() + m_sup[i].abs()) / m_diag[i])
                .fold(T::zero(), T::max)
                .min(T::one());
            let w = T::lit(2.0) / (T::one() + (T::one() - rho * rho).sqrt());
            w.max(T::one()).min(T::lit(1.95))
        }
    };

    v.clear();
    v.extend(
        v_next
            .iter()
            .zip(problem.lower)
            .map(|(&x, &lo)| x.max(lo).min(problem.upper)),
    );
    if let Some(origin) = problem.origin {
        v[0] = origin;
    }
    v[last] = problem.upper;

    let clamp = |x: T, i: usize| x.max(problem.lower[i]).min(problem.upper);
    for iteration in 1..=settings.max_iter {
        let mut max_update = T::zero();
        for i in first..last {
            let left = if i == 0 { T::zero() } else { m_sub[i] * v[i - 1] };
            let gauss_seidel = (rhs[i] - left - m_sup[i] * v[i + 1]) / m_diag[i];
            let updated = clamp(v[i] + omega * (gauss_seidel - v[i]), i);
            max_update = max_update.max((updated - v[i]).abs());
            v[i] = updated;
        }
        if max_update <= settings.tol {
            let (residual, location) = step_residual(v, &rhs, &m_sub, &m_diag, &m_sup, problem, first);
            if residual <= settings.tol {
                return Ok(StepOutcome {
                    iterations: iteration,
                    residual,
                    location,
                });
            }
        }
    }
    let (residual, _) = step_residual(v, &rhs, &m_sub, &m_diag, &m_sup, problem, first);
    Err((settings.max_iter, residual))
}

fn step_residual<T: Scalar>(
    v: &[T],
    rhs: &[T],
    m_sub: &[T],
    m_diag: &[T],
    m_sup: &[T],
    problem: &StepProblem<'_, T>,
    first: usize,
) -> (T, usize) {
    let last = v.len() - 1;
    let mut worst = T::zero();
    let mut at = first;
    for i in first..last {
        let left = if i == 0 { T::zero() } else { m_sub[i] * v[i - 1] };
        let eq = (left + m_diag[i] * v[i] + m_sup[i] * v[i + 1] - rhs[i]) / m_diag[i];
        let r = eq
            .min(v[i] - problem.lower[i])
            .max(v[i] - problem.upper)
            .abs();
        if r > worst {
            worst = r;
            at = i;
        }
    }
    (worst, at)
}

/// Maps the PSOR failure tuple into the public error.
pub(crate) fn no_convergence<T: Scalar>(step: usize, t: T, failure: (usize, T)) -> Error {
    Error::NoConvergence {
        step,
        t: t.as_f64(),
        residual: failure.1.as_f64(),
        iterations: failure.0,
    }
}
