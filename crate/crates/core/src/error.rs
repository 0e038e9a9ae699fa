use thiserror::Error;

use crate::verifier::ParamBox;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {what} needs {requested} intervals, cap is {cap}")]
    ResourceLimit {
        what: String,
        requested: u128,
        cap: usize,
    },

    #[error("corrupt cache record #{index} (k={k}, N={n}): {reason}")]
    CacheCorrupt {
        index: usize,
        k: u64,
        n: u64,
        reason: String,
    },

    #[error("undecided: {surviving_total} boxes survived the depth cap after exploring {boxes_explored}")]
    Undecided {
        /// The first surviving boxes in subdivision order (truncated).
        surviving: Vec<ParamBox>,
        surviving_total: u64,
        boxes_explored: u64,
    },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ResourceLimit { .. } => "resource-limit",
            Error::CacheCorrupt { .. } => "cache-corrupt",
            Error::Undecided { .. } => "undecided",
            Error::Inconsistency(_) => "internal-inconsistency",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
