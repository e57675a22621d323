use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("context covariance is singular: lambda_min = {lambda_min:e}")]
    SingularCovariance { lambda_min: f64 },

    #[error("loss {value} outside [-1, 1] at round {round}, arm {arm}, context {context:?}")]
    LossOutOfRange {
        round: usize,
        arm: usize,
        value: f64,
        context: Vec<f64>,
    },

    #[error("non-finite loss estimate for arm {arm}")]
    NonFiniteEstimate { arm: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("records come from different configurations")]
    MismatchedConfigs,

    #[error("value at index {index} is not positive: {value}")]
    NonPositiveValue { index: usize, value: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
