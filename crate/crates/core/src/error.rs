use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimensions, variants, preconditions).
    #[error("invalid input: {0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// An enumeration or size guard was exceeded.
    #[error("scale guard exceeded: {0}")]
    Scale(String),
    /// The simplex could not reach a trustworthy basis.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
