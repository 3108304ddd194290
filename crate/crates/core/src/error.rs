use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsamError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("unsupported penalty: {0}")]
    Unsupported(String),

    /// An inner solver stopped without meeting its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Solver {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("objective diverged at iteration {iteration} (value {value})")]
    Divergence { iteration: usize, value: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("fold {fold} is degenerate: {reason}")]
    FoldDegenerate { fold: usize, reason: String },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl GsamError {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GsamError::NonFinite(_)
                | GsamError::Solver { .. }
                | GsamError::Divergence { .. }
                | GsamError::Oracle(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GsamError>;
