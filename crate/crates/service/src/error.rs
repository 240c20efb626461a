use std::path::PathBuf;

use framelabel_core::annotation::AnnotationError;
use framelabel_core::augment::AugmentError;
use framelabel_core::autolabel::AutolabelError;
use framelabel_core::formats::FormatError;
use framelabel_core::propagation::PropagationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{what} {id} not found")]
    NotFound { what: &'static str, id: String },
    #[error("revision conflict: expected {expected}, frame is at {actual}")]
    Conflict { expected: u64, actual: u64 },
    #[error("{0}")]
    Validation(String),
    #[error("class {0} is not registered")]
    ClassNotFound(u32),
    #[error("{0}")]
    OutOfBounds(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no images found under {}", .0.display())]
    EmptyDataset(PathBuf),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("{0}")]
    InvalidState(String),
    #[error("cancelled")]
    Cancelled,
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn not_found(what: &'static str, id: impl Into<String>) -> Self {
        Self::NotFound { what, id: id.into() }
    }

    pub fn io(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    /// HTTP status for this error.
    pub fn status(&self) -> u16 {
        match self {
            Self::NotFound { .. } => 404,
            Self::Conflict { .. } | Self::InvalidState(_) | Self::Cancelled => 409,
            Self::Validation(_) | Self::ClassNotFound(_) | Self::OutOfBounds(_) | Self::Config(_) | Self::EmptyDataset(_) => 422,
            Self::Io { .. } | Self::Backend(_) | Self::Internal(_) => 500,
        }
    }

    /// Message-catalog key describing the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Self::NotFound { .. } => "error.not_found",
            Self::Conflict { .. } => "error.conflict",
            Self::Validation(_) => "error.validation",
            Self::ClassNotFound(_) => "error.class_not_found",
            Self::OutOfBounds(_) => "error.out_of_bounds",
            Self::Config(_) => "error.config",
            Self::EmptyDataset(_) => "error.empty_dataset",
            Self::Io { .. } => "error.io",
            Self::Backend(_) => "error.backend",
            Self::InvalidState(_) => "error.invalid_state",
            Self::Cancelled => "error.cancelled",
            Self::Internal(_) => "error.internal",
        }
    }
}

impl From<AnnotationError> for ServiceError {
    fn from(e: AnnotationError) -> Self {
        match e {
            AnnotationError::ClassNotFound(c) => Self::ClassNotFound(c),
            AnnotationError::BoxNotFound(id) => Self::not_found("box", id.to_string()),
            AnnotationError::OutOfBounds(_) => Self::OutOfBounds(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<PropagationError> for ServiceError {
    fn from(e: PropagationError) -> Self {
        match e {
            PropagationError::Edit(inner) => inner.into(),
            PropagationError::FrameNotFound(id) => Self::not_found("frame", id),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<AutolabelError> for ServiceError {
    fn from(e: AutolabelError) -> Self {
        match e {
            AutolabelError::ClassNotFound(c) => Self::ClassNotFound(c),
            AutolabelError::PromptNotFound(id) => Self::not_found("prompt", id.to_string()),
            AutolabelError::FrameNotFound(id) => Self::not_found("frame", id),
            AutolabelError::OutOfBounds(_) => Self::OutOfBounds(e.to_string()),
            AutolabelError::Config(m) => Self::Config(m),
            AutolabelError::Backend { .. } | AutolabelError::Image { .. } => Self::Backend(e.to_string()),
            AutolabelError::Annotation(inner) => inner.into(),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<AugmentError> for ServiceError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::Config(m) => Self::Config(m),
            AugmentError::Io { path, message } => Self::Io {
                path: path.into(),
                message,
            },
            other => Self::Internal(other.to_string()),
        }
    }
}

impl From<FormatError> for ServiceError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io { path, message } => Self::Io { path, message },
            other => Self::Validation(other.to_string()),
        }
    }
}
