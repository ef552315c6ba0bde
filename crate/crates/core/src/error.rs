use thiserror::Error;

/// Errors produced while building, verifying, or loading estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized (|c|^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("resource guard exceeded: {what} needs {needed}, limit is {limit}")]
    ResourceGuard {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("certification failed: {what} residual {residual:e} exceeds {tolerance:e}")]
    Certification {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("Newton iteration for Legendre root {index} of order {order} did not converge")]
    NoConvergence { order: usize, index: usize },

    #[error("unsupported POVM form: {0}")]
    UnsupportedForm(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line front end.
    ///
    /// 1 certification failure, 2 input error, 3 resource guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Certification { .. } | Error::NoConvergence { .. } => 1,
            Error::ResourceGuard { .. } | Error::Overflow(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
