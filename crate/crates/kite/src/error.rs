use std::path::PathBuf;

use crate::format::FormatError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("duplicate model id `{0}`")]
    DuplicateModelId(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] kite_core::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const PARTIAL: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const DEGENERATE: u8 = 3;
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(e) if e.is_degenerate() => exit::DEGENERATE,
            Error::Format { source: FormatError::NonFiniteValue { .. }, .. } => exit::DEGENERATE,
            _ => exit::CONFIG,
        }
    }
}
