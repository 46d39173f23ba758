use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntax-level failure while reading a document.
    #[error("{context}: malformed input at line {line}, column {column}: {message}")]
    MalformedInput {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// Well-formed input that breaks a type invariant.
    #[error("{context}: {message}")]
    InvariantViolation { context: String, message: String },

    #[error("image `{0}` is not present in the manifest")]
    UnknownImage(String),

    #[error("line {line}: unknown label `{value}` (expected normal, benign or malignant)")]
    UnknownLabel { line: usize, value: String },

    #[error("both detection sets use detector id `{0}`")]
    DetectorIdCollision(String),

    #[error("image `{0}` has no boxes and no whole-image label")]
    MissingWholeImageLabel(String),

    #[error("image `{image_id}`: box {box_index} of detector `{detector_id}` has no label")]
    MissingBoxLabel {
        detector_id: String,
        image_id: String,
        box_index: usize,
    },

    #[error("no predicted label for image `{0}`")]
    MissingPrediction(String),

    #[error("image `{image_id}`: could not place a background box after {attempts} attempts")]
    PlacementExhausted { image_id: String, attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invariant(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvariantViolation {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn malformed(
        context: impl Into<String>,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::MalformedInput {
            context: context.into(),
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn from_json(context: &str, err: serde_json::Error) -> Self {
        Error::malformed(context, err.line(), err.column(), err.to_string())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 1 for I/O failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
