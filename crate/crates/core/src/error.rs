use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two sequences (or a sequence and an oracle) disagree on length or alphabet.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The attack tried to issue more queries than it was granted.
    #[error("query budget exhausted: {used} of {budget} queries already issued")]
    Budget { used: usize, budget: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("exhaustive enumeration of {states} hidden sequences exceeds the limit of {limit}")]
    StateSpace { states: u128, limit: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trial {trial} (derived seed {seed}) failed: {message}")]
    Trial { trial: usize, seed: u64, message: String },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
