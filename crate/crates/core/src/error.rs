use thiserror::Error;

/// Errors produced by the codec, watermarking and evaluation layers.
#[derive(Debug, Error)]
pub enum VqError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file content. `offset` is the byte position at which
    /// parsing failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("watermark capacity exceeded: {needed} positions needed, {available} available")]
    Capacity { needed: usize, available: usize },

    #[error("codebook hash mismatch: expected {expected:#018x}, got {actual:#018x}")]
    CodebookMismatch { expected: u64, actual: u64 },

    /// A metric whose value is undefined for the given operands,
    /// e.g. normalized correlation with an all-zero bitmap.
    #[error("undefined metric: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, VqError>;

impl VqError {
    pub fn format(offset: usize, message: impl Into<String>) -> Self {
        VqError::Format {
            offset,
            message: message.into(),
        }
    }

    pub fn dimension(message: impl Into<String>) -> Self {
        VqError::Dimension(message.into())
    }

    pub fn parameter(message: impl Into<String>) -> Self {
        VqError::Parameter(message.into())
    }
}
