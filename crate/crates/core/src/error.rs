use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed mesh: {0}")]
    Mesh(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A radius required by the run is below what the mesh can resolve.
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("no balanced cut: {0}")]
    NoCut(String),
    #[error("recursion aborted: {0}")]
    Depth(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
