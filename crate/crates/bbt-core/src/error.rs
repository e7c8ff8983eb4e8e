use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation precondition was violated by the caller.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A frame could not be processed. The tracker that raised this keeps
    /// its previous state and may continue on the next frame.
    #[error("frame processing failed: {0}")]
    Frame(String),

    /// Sequence ingestion failed (missing files, malformed ground truth,
    /// frame/annotation count mismatch).
    #[error("ingestion failed: {0}")]
    Ingestion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
