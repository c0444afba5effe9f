use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated: {0}")]
    Truncated(String),
    #[error("header exceeds 2^32 - 1 bytes")]
    HeaderTooLarge,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("missing manifest in {0}")]
    MissingManifest(PathBuf),
    #[error("pre-trained checkpoint digest mismatch: artifact expects {expected}, got {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("layer map line {line}: {msg}")]
    LayerMap { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] tvq_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Header(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
