use thiserror::Error;

/// Errors reported by the solver and the diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate flattening map: min J = {min_j:.4e}")]
    DegenerateMapping { min_j: f64 },

    #[error("resolution too low: {0}")]
    ResolutionTooLow(String),

    #[error("incompatible data: {0}")]
    IncompatibleData(String),

    #[error("singular mode operator at |k| = {k}")]
    SingularMode { k: f64 },

    #[error("diverged at t = {t}: {reason}")]
    Diverged { t: f64, reason: String },

    #[error("non-positive data: {0}")]
    NonPositiveData(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
