use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid stack parameters: overlap {overlap} must be smaller than stack size {stack_size}")]
    InvalidStackParams { stack_size: usize, overlap: usize },

    #[error("slabs do not match the stack plan: {0}")]
    PlanMismatch(String),

    #[error("not a DICOM file: {0}")]
    NotDicom(String),

    #[error("unsupported DICOM encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("malformed DICOM stream at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },

    #[error("ambiguous slice order: {0}")]
    AmbiguousOrder(String),

    /// Native volume format problem, naming the offending field.
    #[error("format error in `{field}`: {reason}")]
    Format { field: String, reason: String },

    #[error("backend failure: {message}")]
    Backend { message: String, diagnostics: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::GeometryMismatch(msg.into())
    }

    pub(crate) fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn backend(message: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Backend {
            message: message.into(),
            diagnostics: diagnostics.into(),
        }
    }
}
