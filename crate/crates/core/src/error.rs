use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("linear algebra routine failed: {0}")]
    Linalg(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    /// The Fisher information has zero trace (all features vanish).
    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("column {0} of the first-layer weights is zero")]
    ZeroColumn(usize),

    /// Gram-Schmidt on the diagonal-pair vectors did not find a `d - 1`
    /// dimensional span for this weight draw.
    #[error("approximate basis rank check failed: expected {expected} independent vectors, found {found}")]
    BasisRank { expected: usize, found: usize },

    #[error("basis Gram matrix is singular (condition number {0:e})")]
    SingularGram(f64),

    #[error("residual series diverged: {0}")]
    Series(String),

    #[error("exhaustive search over {points} grid points exceeds the budget of {budget}")]
    BudgetExceeded { points: f64, budget: u64 },

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    /// True for failures caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_))
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
