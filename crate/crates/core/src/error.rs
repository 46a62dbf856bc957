use std::io;

use thiserror::Error;

/// Every failure the pipeline can surface, grouped by the stage that raises it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("encode error: {0}")]
    Encode(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("aggregation failed: {0}")]
    Aggregation(String),

    #[error("serialize error: {0}")]
    Serialize(String),

    #[error("deserialize error: {0}")]
    Deserialize(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("channel closed")]
    ChannelClosed,

    #[error("channel timed out")]
    Timeout,

    #[error("round {round} aborted by client `{client}`: {reason}")]
    RoundAbort {
        round: u32,
        client: String,
        reason: String,
    },

    #[error("client aborted: {0}")]
    ClientAbort(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
