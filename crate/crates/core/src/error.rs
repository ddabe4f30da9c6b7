use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid filter parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("checksum mismatch: sentence says {found}, computed {computed}")]
    Checksum { found: String, computed: String },

    #[error("malformed NMEA field {index}: {reason}")]
    Field { index: usize, reason: String },

    #[error("malformed NMEA sentence: {0}")]
    Sentence(String),

    #[error("unsupported sentence type {0}")]
    UnsupportedSentence(String),

    #[error("receiver reports no fix")]
    NoFix,

    #[error("CSV schema: {0}")]
    Schema(String),

    #[error("CSV line {line}: {reason}")]
    Row { line: u64, reason: String },

    #[error("validation: {0}")]
    Validation(String),

    #[error("series length mismatch: expected {expected}, got {found}")]
    Shape { expected: usize, found: usize },

    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: io::Error },

    #[error("cannot connect to {addr}: {source}")]
    Connect { addr: String, source: io::Error },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Row {
            line,
            reason: e.to_string(),
        }
    }
}
