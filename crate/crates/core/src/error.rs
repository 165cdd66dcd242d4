use std::io;

use thiserror::Error;

use crate::fault::RegionId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown region {0}")]
    UnknownRegion(RegionId),

    #[error("region {0} has no checkpoint")]
    NoCheckpoint(RegionId),

    #[error("deterministic fault pattern is empty")]
    EmptyPattern,

    #[error("operation requires {expected} fault mode")]
    WrongFaultMode { expected: &'static str },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
