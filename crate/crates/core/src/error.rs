use thiserror::Error;

/// Errors produced by the processing kernels and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("singular system: zero pivot at index {index}")]
    Singular { index: usize },
    #[error("degenerate Givens rotation: both inputs are zero")]
    DegenerateRotation,
    #[error("modified Givens rotation requires a nonzero pivot")]
    ZeroPivot,
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("empty input")]
    EmptyInput,
    #[error("calibration failed: zero receiver response at antenna {antenna}")]
    Calibration { antenna: usize },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
