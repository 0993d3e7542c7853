use std::path::PathBuf;

/// Error type shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its valid domain.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called with arguments outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A statistic was requested from too few observations.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The smart charging mechanism exhausted its generation cap without
    /// finding a qualifying service duration.
    #[error(
        "service assignment failed after {fresh_draws} fresh draws \
         (reservoir length {reservoir_len}): {context}"
    )]
    AssignmentFailure {
        fresh_draws: u64,
        reservoir_len: usize,
        context: String,
    },

    /// Bookkeeping invariant violated inside the simulator.
    #[error("internal inconsistency: {0}")]
    Internal(String),

    /// A scenario file failed to parse.
    #[error("{path}:{line}: {msg}", path = path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
