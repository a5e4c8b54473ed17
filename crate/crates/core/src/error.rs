use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window too large: expected {expected:.3e} points, budget is {budget:.3e}")]
    WindowTooLarge { expected: f64, budget: f64 },

    #[error("duplicate point in layer {layer}")]
    DuplicatePoint { layer: usize },

    #[error("instance too large for enumeration: {paths:.3e} paths (limit {limit:.0e})")]
    InstanceTooLarge { paths: f64, limit: f64 },

    #[error("environment does not cover layers {first}..={last} (has {available})")]
    NotCovered {
        first: usize,
        last: usize,
        available: usize,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
