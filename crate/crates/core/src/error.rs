use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("element {element} has a degenerate Jacobian (det = {det:e})")]
    DegenerateElement { element: usize, det: f64 },

    #[error("factorization failed at pivot {pivot} (pivot value {value:e})")]
    Factorization { pivot: usize, value: f64 },

    #[error("eigensolver did not converge (worst relative residual {residual:e})")]
    EigenConvergence { residual: f64 },

    #[error("right-hand side is inconsistent with the nullspace (|nullᵀ·rhs| = {magnitude:e})")]
    Inconsistent { magnitude: f64 },

    #[error("modes {first} and {second} are nearly degenerate (relative gap {gap:e})")]
    DegenerateModes {
        first: usize,
        second: usize,
        gap: f64,
    },

    #[error("columns {columns:?} are numerically dependent")]
    RankDeficient { columns: Vec<usize> },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("singular iteration matrix")]
    Singular,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
