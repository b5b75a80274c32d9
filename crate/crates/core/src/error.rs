use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MbcsError {
    #[error("{what}: size {size} exceeds the limit {limit}")]
    Size {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("{what}: index {index} outside [1, {max}]")]
    Range {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("time grid does not cover the envelope of source {source_index}: {detail}")]
    GridCoverage { source_index: usize, detail: String },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, MbcsError>;
