use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum FellerError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge: error estimate {error:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    Quadrature { error: f64, tolerance: f64 },

    #[error("diffusion matrix is not positive semidefinite at the queried state")]
    NotPositiveSemidefinite,

    #[error("operation requires a pure-jump triplet (zero diffusion matrix)")]
    DiffusionNotSupported,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error at `{path}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Schema {
        path: String,
        line: Option<usize>,
        message: String,
    },

    #[error("malformed path file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, FellerError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FellerError {
    FellerError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(FellerError::Dimension { expected, got })
    }
}
