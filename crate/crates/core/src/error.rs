use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    /// A computation would exceed the configured enumeration or memory budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The polynomial takes a negative value somewhere on the dilated box.
    #[error("inadmissible box: F({witness}) = {value} < 0")]
    Inadmissible { witness: String, value: String },

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// A structural guarantee (for example a positive leading coefficient) failed.
    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
