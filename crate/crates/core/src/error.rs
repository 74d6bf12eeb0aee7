use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An integral that the caller needs to be finite is not.
    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("quadrature did not reach tolerance (relative error {rel_err:e} after {panels} panels)")]
    QuadratureFailed { rel_err: f64, panels: usize },

    /// A numerical certificate or audit inequality was violated.
    #[error("audit failed: {0}")]
    AuditFailed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
