//! Error type shared by every pipeline stage.

use std::fmt;
use std::io;

/// Errors produced by the pipeline.
#[derive(Debug)]
pub enum Error {
    /// Invalid configuration or parameter choice.
    Config(String),
    /// An input has the wrong size or shape for the requested operation.
    Size(String),
    /// A file does not match the expected on-disk format.
    Format(String),
    /// A file parses structurally but its payload is incomplete or overlong.
    Corrupt {
        expected_bytes: u64,
        actual_bytes: u64,
    },
    /// Data fails a domain validation rule.
    Validation(String),
    /// Training cannot proceed on the given data.
    Train(String),
    /// Underlying I/O failure.
    Io(io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for CLI surfaces: 2 for validation-class errors,
    /// 1 for internal/I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Size(msg) => write!(f, "size error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Corrupt {
                expected_bytes,
                actual_bytes,
            } => write!(
                f,
                "corrupt file: expected {expected_bytes} bytes, found {actual_bytes}"
            ),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Train(msg) => write!(f, "training error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}
