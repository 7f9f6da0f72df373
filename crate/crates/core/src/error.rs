use std::io;

use thiserror::Error;

/// Errors raised by sketch construction, streaming, and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: u64, limit: u64 },

    #[error("enumeration budget exceeded: {requested} transition evaluations requested, limit is {limit}")]
    Budget { requested: u128, limit: u128 },

    #[error("update magnitude {value} exceeds the declared bound {bound}")]
    Overflow { value: i64, bound: i64 },

    #[error("sketch parameters do not match: {0}")]
    Mismatch(String),

    #[error("private sketch already finalized")]
    AlreadyFinalized,

    #[error("private sketch has not been finalized")]
    NotFinalized,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("sampler failed: {0}")]
    SamplerFailure(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}

pub(crate) fn check_index(index: u64, limit: u64) -> Result<()> {
    if index < limit {
        Ok(())
    } else {
        Err(Error::OutOfRange { index, limit })
    }
}
