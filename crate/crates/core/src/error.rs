use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible arguments: {0}")]
    InfeasibleArguments(String),

    #[error("underdetermined fit: interval of size {size} cannot determine a degree-{degree} polynomial")]
    Underdetermined { size: usize, degree: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("diverged at iteration {iteration}: loss = {loss}")]
    Divergence { iteration: usize, loss: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numbers themselves (divergence,
    /// non-finite values) rather than by malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::Divergence { .. })
    }
}
