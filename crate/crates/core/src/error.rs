use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid knowledge setting: {0}")]
    InvalidSetting(String),

    #[error("invalid knowledge function: {0}")]
    InvalidFunction(String),

    #[error("invalid likelihood landscape: {0}")]
    InvalidLandscape(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },

    #[error("bound inapplicable: {0}")]
    BoundInapplicable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenvalue decomposition did not converge")]
    EigenFailure,

    #[error("configuration is invalid: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
