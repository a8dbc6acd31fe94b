use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the statistical routines and the file front-ends.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Zero pooled variance where a standardized quantity was requested.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// An iterative routine hit its iteration cap.
    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    /// Malformed user input (files, plans, options).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{failed} of {total} replications failed in cell {cell} (limit 1%)")]
    EstimatorFailures {
        cell: String,
        failed: usize,
        total: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
