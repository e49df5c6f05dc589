//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error("dataset has no interactions")]
    EmptyDataset,

    #[error("user {user} has {have} positives; a leave-one-out split needs at least {need}")]
    TooFewPositives {
        user: String,
        have: usize,
        need: usize,
    },

    #[error("user {user} has only {available} candidate negatives; {needed} are needed")]
    TooFewNegatives {
        user: String,
        available: usize,
        needed: usize,
    },

    #[error("user {user} has no negative items to sample from")]
    NoNegatives { user: String },

    #[error("loss {loss} requires {what} but none was supplied")]
    MissingComponent { loss: String, what: &'static str },

    #[error("non-finite parameter detected at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },

    #[error("{0}")]
    InvalidConfig(String),

    #[error("unknown user id {0}")]
    UnknownUser(String),

    #[error("unknown item id {0}")]
    UnknownItem(String),
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::MissingComponent { .. } => 1,
            Error::NonFinite { .. } => 3,
            _ => 2,
        }
    }
}
