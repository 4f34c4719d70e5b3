use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("ground-truth parameter vector has zero norm")]
    ZeroNormTruth,
    #[error("LP solve failed: {0}")]
    Lp(#[from] LpFailure),
    #[error("convex estimator LP terminated with status {status:?}")]
    Estimator { status: crate::lp::LpStatus },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Hard failures of the simplex solver. Infeasible and unbounded outcomes are
/// ordinary statuses, not failures; these are the cases where the solver could
/// not certify any status.
#[derive(Debug, Error)]
pub enum LpFailure {
    #[error("iteration limit of {limit} pivots exceeded after {iterations} iterations")]
    IterationLimit { limit: usize, iterations: usize },
    #[error("singular basis could not be repaired")]
    SingularBasis,
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
