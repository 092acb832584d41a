use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("prefix length {n_cpp} must be smaller than transform size {n}")]
    PrefixTooLong { n_cpp: usize, n: usize },

    #[error("path delays are co-located (minimum delay gap is zero); merge the paths first")]
    CoLocatedDelays,

    #[error("path delay {delay} does not fit in a prefix of {n_cpp} samples")]
    DelayExceedsPrefix { delay: usize, n_cpp: usize },

    #[error("{n} is not divisible by {k}")]
    NotDivisible { n: usize, k: usize },

    #[error("signature support does not match the indicator matrix")]
    SupportMismatch,

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("enumeration of {size} points exceeds the cap of {cap}")]
    EnumerationCap { size: f64, cap: f64 },

    #[error("message-passing row {row} needs {size} joint hypotheses, above the cap of {cap}")]
    ComplexityCap { row: usize, size: f64, cap: f64 },

    #[error("matrix is singular or not positive definite")]
    Singular,

    #[error("variances must be positive and finite")]
    NonPositiveVariance,

    #[error("difference vector is zero")]
    ZeroDelta,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
