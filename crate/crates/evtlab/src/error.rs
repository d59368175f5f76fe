//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    /// The observable was evaluated exactly on its target set (zero distance).
    /// Simulation callers treat this as a saturated maximum.
    #[error("point lies exactly on the target set")]
    OnTarget,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("wrong tail: {0}")]
    WrongTail(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line interface:
    /// 1 usage, 2 data, 3 fit failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FitFailed(_) => 3,
            Error::Data(_)
            | Error::Io(_)
            | Error::InsufficientData(_)
            | Error::DegenerateInput(_)
            | Error::OnTarget => 2,
            _ => 1,
        }
    }
}
