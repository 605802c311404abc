use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for a set of {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("{0} must not be empty")]
    EmptySet(&'static str),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error(
        "subset {subset} holds {size} points but k' = {k_prime} centers are required; lower L"
    )]
    SubsetTooSmall {
        subset: usize,
        size: usize,
        k_prime: usize,
    },
    // the inner error is part of the message rather than a chained source,
    // so reporters that walk the chain print it once
    #[error("round {round}, reducer {reducer}: {inner}")]
    Reducer {
        round: usize,
        reducer: usize,
        inner: Box<Error>,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
