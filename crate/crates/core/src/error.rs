use std::path::PathBuf;

use crate::{CellId, UserId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("allocation entry ({helper}, {user}) is not in the ingress neighbourhood of user {user}")]
    UnknownEntry { helper: CellId, user: UserId },

    #[error("sharing value {value} for ({helper}, {user}) is outside [0, 1]")]
    OutOfBox { helper: CellId, user: UserId, value: f64 },

    #[error("helper {helper} has non-positive SINR {sinr} for user {user}")]
    NonPositiveSinr { helper: CellId, user: UserId, sinr: f64 },

    #[error("instance too large for exhaustive search: {bits} sharing bits (limit {limit})")]
    InstanceTooLarge { bits: usize, limit: usize },

    #[error("{solver} did not converge within {iterations} iterations")]
    NotConverged { solver: &'static str, iterations: usize },

    #[error("parse error in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
