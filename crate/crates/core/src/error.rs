use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: expected {expected}")]
    Syntax { pos: usize, expected: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("floor is indeterminate: approximate value within epsilon of an integer")]
    IndeterminateFloor,

    #[error("approximate arithmetic cannot decide: {0}")]
    ApproxIndeterminate(String),

    #[error("point {point} hits a partition endpoint at step {step}")]
    BoundaryHit { point: String, step: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("operator was built on a different basis")]
    BasisMismatch,

    #[error("no admissible word cylinder meets the basis")]
    EmptySelection,

    #[error("no core columns survive the truncation")]
    NoCoreColumns,

    #[error("coefficient left the unit-circle kernel: {0}")]
    Coefficient(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
