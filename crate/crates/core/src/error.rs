use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("deck size {n} exceeds the exact-analysis cap {cap}")]
    ExactCapExceeded { n: usize, cap: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no time found within horizon {horizon}")]
    HorizonExhausted { horizon: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
