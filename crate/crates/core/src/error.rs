use thiserror::Error;

/// Errors produced by the library.
///
/// `Usage` covers bad inputs (wrong dimensions, out-of-range parameters,
/// unknown names). `Numerical` covers failures of an otherwise valid
/// computation, such as an integrator that cannot make progress.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integrator failed at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_) | Error::DimensionMismatch { .. } | Error::Json(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
