use std::io;
use std::path::PathBuf;

/// Errors produced anywhere in the acquisition pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid url `{url}`: {reason}")]
    InvalidUrl { url: String, reason: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("backend error (status {status:?}): {message}")]
    Backend { status: Option<u16>, message: String },

    #[error("throttled: {0}")]
    Throttled(String),

    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("unparseable document `{doc_id}`: {reason}")]
    Unparseable { doc_id: String, reason: String },

    #[error("no title found in document `{0}`")]
    NoTitle(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invalid_url(url: &str, reason: impl Into<String>) -> Self {
        Error::InvalidUrl {
            url: url.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by bad or malformed data rather than a
    /// misbehaving remote service.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::InvalidUrl { .. }
                | Error::InvalidLabeling(_)
                | Error::DegenerateTraining(_)
                | Error::Unparseable { .. }
                | Error::NoTitle(_)
                | Error::Invariant(_)
                | Error::Parse { .. }
                | Error::FormatVersion { .. }
                | Error::Json(_)
                | Error::NotFound(_)
                | Error::Config(_)
        )
    }

    pub fn is_backend_error(&self) -> bool {
        matches!(self, Error::Backend { .. } | Error::Throttled(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
