use thiserror::Error;

/// Errors raised anywhere in the solver and analysis pipeline.
///
/// Every variant carries a stable machine-readable code, see [`Error::code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coupon {c} >= r*K = {rk}: the call barrier becomes an active upper obstacle")]
    UpperObstacleActive { c: f64, rk: f64 },
    #[error("coupon {c} >= q*K = {qk}: conversion is never optimal, there is no free boundary")]
    NoFreeBoundary { c: f64, qk: f64 },
    #[error("parameter `{field}` = {value} violates its bound ({bound})")]
    NonPositive {
        field: &'static str,
        value: f64,
        bound: &'static str,
    },
    #[error("parameter `{field}` is not finite")]
    NonFinite { field: &'static str },
    #[error("time {t} lies outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("grid needs at least {min} {axis} nodes, got {got}")]
    GridTooSmall {
        axis: &'static str,
        min: usize,
        got: usize,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("projected SOR did not converge at step {step} (t = {t}): residual {residual} after {iterations} sweeps")]
    NoConvergence {
        step: usize,
        t: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("obstacle violated by {excess} at node ({step}, {node})")]
    ObstacleViolation {
        step: usize,
        node: usize,
        excess: f64,
    },
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("no exercise region detected on any time slice")]
    EmptyExerciseRegion,
    #[error("rescaled cylinder leaves the transformed domain")]
    PatchOutOfDomain,
    #[error("rescaled patch has zero normalizer")]
    DegeneratePatch,
    #[error("only {found} valid cylinders fit in the domain, {required} required")]
    InsufficientSamples { found: usize, required: usize },
    #[error("risk-neutral probability {p} outside (0, 1)")]
    ProbabilityOutOfRange { p: f64 },
    #[error("csv export failed: {0}")]
    Export(String),
}

impl Error {
    /// Stable identifier used by reports and exit-code mapping.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UpperObstacleActive { .. } => "UpperObstacleActive",
            Error::NoFreeBoundary { .. } => "NoFreeBoundary",
            Error::NonPositive { .. } => "NonPositive",
            Error::NonFinite { .. } => "NonFinite",
            Error::TimeOutOfRange { .. } => "TimeOutOfRange",
            Error::GridTooSmall { .. } => "GridTooSmall",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::ObstacleViolation { .. } => "ObstacleViolation",
            Error::InsufficientResolution(_) => "InsufficientResolution",
            Error::EmptyExerciseRegion => "EmptyExerciseRegion",
            Error::PatchOutOfDomain => "PatchOutOfDomain",
            Error::DegeneratePatch => "DegeneratePatch",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::ProbabilityOutOfRange { .. } => "ProbabilityOutOfRange",
            Error::Export(_) => "Export",
        }
    }

    /// True for parameter/config validation failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UpperObstacleActive { .. }
                | Error::NoFreeBoundary { .. }
                | Error::NonPositive { .. }
                | Error::NonFinite { .. }
                | Error::GridTooSmall { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
