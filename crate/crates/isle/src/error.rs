use std::path::{Path, PathBuf};

use isle_core::corpus::CorpusError;
use isle_core::graph::GraphError;
use isle_core::lexical::IndexError;
use isle_core::retrieval::RetrievalError;
use isle_core::topics::TopicError;
use isle_core::vector::{EmbedError, VectorError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsleError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("embedder: {0}")]
    Embed(#[from] EmbedError),
}

pub type Result<T, E = IsleError> = std::result::Result<T, E>;

/// Coarse classification shared by HTTP status codes and CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    NotFound,
    Conflict,
    Data,
    Internal,
}

impl IsleError {
    pub fn io(path: impl AsRef<Path>) -> impl FnOnce(std::io::Error) -> IsleError {
        let path = path.as_ref().to_path_buf();
        move |source| IsleError::Io { path, source }
    }

    pub fn json(path: impl AsRef<Path>) -> impl FnOnce(serde_json::Error) -> IsleError {
        let path = path.as_ref().to_path_buf();
        move |source| IsleError::Json { path, source }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            IsleError::Usage(_) | IsleError::BadRequest(_) => ErrorClass::Usage,
            IsleError::NotFound(_) => ErrorClass::NotFound,
            IsleError::Conflict(_) => ErrorClass::Conflict,
            IsleError::Retrieval(RetrievalError::InvalidRequest(_)) => ErrorClass::Usage,
            IsleError::Retrieval(RetrievalError::Consistency { .. }) => ErrorClass::Conflict,
            IsleError::Retrieval(RetrievalError::Embedder(
                EmbedError::ModelMismatch { .. } | EmbedError::Shape { .. },
            ))
            | IsleError::Embed(EmbedError::ModelMismatch { .. } | EmbedError::Shape { .. }) => ErrorClass::Conflict,
            IsleError::Topic(TopicError::InvalidDimension { .. } | TopicError::InvalidRank { .. }) => ErrorClass::Usage,
            IsleError::Data(_)
            | IsleError::Json { .. }
            | IsleError::Corpus(_)
            | IsleError::Index(_)
            | IsleError::Vector(_)
            | IsleError::Graph(_) => ErrorClass::Data,
            _ => ErrorClass::Internal,
        }
    }

    /// Process exit code: 1 for usage errors, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => 1,
            _ => 2,
        }
    }
}
