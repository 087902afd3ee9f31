use thiserror::Error;

/// Errors surfaced by the optimization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input (dimension mismatch, out-of-box point, bad trace).
    #[error("input error: {0}")]
    Input(String),

    /// Invalid configuration (non-positive hyperparameter, unknown key, bad value).
    #[error("config error: {0}")]
    Config(String),

    /// Numerical failure that survived the jitter escalation ladder.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// API called out of contract (e.g. observing a point that was not selected).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("objective error: {0}")]
    Objective(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 for config/input/usage/io, 2 for numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}
