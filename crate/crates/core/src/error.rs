use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value in tensor `{0}`")]
    NonFinite(String),
    #[error("unsupported bit-width {0} (expected 2, 3, 4 or 8)")]
    InvalidBits(u32),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("code {code} out of range for {bits}-bit quantization")]
    CodeOutOfRange { code: u32, bits: u32 },
    #[error("invalid tensor name: {0}")]
    InvalidName(String),
    #[error("duplicate tensor name `{0}`")]
    DuplicateName(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero-norm task vector at index {0}")]
    ZeroNorm(usize),
    #[error("artifact role {0} not accepted here")]
    WrongRole(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
