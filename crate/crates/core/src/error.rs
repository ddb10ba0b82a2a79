use thiserror::Error;

/// Errors raised by kernels, estimators, models, tests and the simulation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MmdError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite input value")]
    NonFiniteInput,

    #[error("too few observations: need at least {needed}, got {found}")]
    TooFewObservations { needed: usize, found: usize },

    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(f64),

    #[error("schedule exponent must be finite and > 2, got {0}")]
    InvalidExponent(f64),

    #[error("level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),

    #[error("q-variance estimate floored at {floor:e} (raw {raw:e}); the statistic has no valid denominator")]
    InvalidDenominator { raw: f64, floor: f64 },

    #[error("parameter coordinate {index} = {value} outside [{lower}, {upper}]")]
    ParamOutOfBox {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("noise streams of the compared models share id {0}; they must be independent")]
    SameStreamIds(u64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("{failures} of {reps} replications failed, above the 0.1% budget (last: {last})")]
    TooManyFailures {
        failures: usize,
        reps: usize,
        last: String,
    },

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MmdError {
    fn from(e: std::io::Error) -> Self {
        MmdError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MmdError>;
