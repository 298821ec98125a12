use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid layer dimensions: {0}")]
    InvalidDims(String),
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("series too short: need more than {required} samples, got {actual}")]
    TooShort { required: usize, actual: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimMismatch {
            context,
            expected,
            actual,
        })
    }
}
