use std::path::PathBuf;

use thiserror::Error;

/// Registry kinds, used in not-found and conflict messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Object,
    Map,
    Relation,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kind::Object => "object",
            Kind::Map => "h-morphism",
            Kind::Relation => "v-morphism",
        })
    }
}

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("{kind} '{id}' not found")]
    NotFound { kind: Kind, id: String },
    #[error("{kind} '{id}' already registered")]
    Conflict { kind: Kind, id: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{}:{line}: {msg}", path.display())]
    Format { path: PathBuf, line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] hubspoke_core::Error),
}

pub type Result<T> = std::result::Result<T, PlatformError>;

pub(crate) fn invalid(msg: impl Into<String>) -> PlatformError {
    PlatformError::InvalidArgument(msg.into())
}
