use thiserror::Error;

/// Errors raised by validation and numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid signal specification: {0}")]
    Spec(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("window [{start}, {start}+{width}) exceeds {buckets} buckets")]
    WindowOverrun {
        start: usize,
        width: usize,
        buckets: usize,
    },
    #[error("infeasible system: {0}")]
    Infeasible(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
