use std::path::PathBuf;

use convbond_core::error::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid input ({}): {0}", .0.code())]
    Validation(CoreError),
    #[error("solver failed{}: {source} ({})", level_suffix(*.level), .source.code())]
    Solver {
        level: Option<usize>,
        source: CoreError,
    },
    #[error("checks failed: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

fn level_suffix(level: Option<usize>) -> String {
    level.map(|l| format!(" at refinement level {l}")).unwrap_or_default()
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Validation(_) => 2,
            HarnessError::Solver { .. } => 3,
            HarnessError::ChecksFailed(_) => 4,
            HarnessError::Io { .. } => 1,
        }
    }

    /// Routes a core error to the validation or solver bucket.
    pub fn from_core(e: CoreError, level: Option<usize>) -> Self {
        if e.is_validation() {
            HarnessError::Validation(e)
        } else {
            HarnessError::Solver { level, source: e }
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| HarnessError::Io { context, source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
