use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("generator index {index} out of range for algebra with {count} generators")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operand is not nilpotent within {bound} terms")]
    NotNilpotent { bound: usize },

    #[error("multivector carries Grassmann-odd parameters where a numeric value is required")]
    ParametricValue,

    #[error("metric is singular")]
    SingularMetric,

    #[error("metric is not conjugate-symmetric (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("conjugation rule violates {constraint}: residual {residual:.3e}")]
    InconsistentRule { constraint: &'static str, residual: f64 },

    #[error("no nonzero metric solves the conjugation rule")]
    NoMetricSolution,

    #[error("metric solution space has dimension {dim}; normalization does not pin a representative")]
    AmbiguousMetricSolution { dim: usize },

    #[error("normalization infeasible: {reason}")]
    NormalizationInfeasible { reason: String },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
