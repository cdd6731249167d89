use thiserror::Error;

/// Errors raised by the laboratory routines.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported dimension {0} (at most 3)")]
    UnsupportedDimension(usize),

    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("{context}: {source}")]
    Experiment {
        context: String,
        #[source]
        source: Box<LabError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        match self {
            LabError::Parse { .. } => true,
            LabError::Experiment { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
