use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    /// Bad magic, unsupported version, or malformed structured text.
    #[error("format error: {0}")]
    Format(String),
    /// Sizes in a file disagree with its header or with each other.
    #[error("corrupt store: {0}")]
    Corrupt(String),
    /// Non-finite values or broken numeric invariants.
    #[error("data error: {0}")]
    Data(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("extraction error: {message} (achievable: {achievable})")]
    Extraction { message: String, achievable: usize },
    #[error("selection error: {0}")]
    Selection(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
