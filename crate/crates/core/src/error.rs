use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integration failed at t = {t:.6} ps (step {step:.3e} ps, {accepted} accepted steps): {reason}")]
    Integration {
        t: f64,
        step: f64,
        accepted: usize,
        reason: String,
    },

    #[error("non-cyclic evolution: ground-return population {population:.6} below {threshold}")]
    NonCyclic { population: f64, threshold: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("sweep failed: {failed} of {total} grid points errored (first: {first})")]
    Sweep {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Short machine-readable code, used in sweep status columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Integration { .. } => "integration",
            Error::NonCyclic { .. } => "non_cyclic",
            Error::Fit(_) => "fit",
            Error::Sweep { .. } => "sweep",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
