use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidInput(String),
    /// Feature vector length does not match the model dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// Two records in one collection share a claim id.
    DuplicateClaimId(u64),
    /// Training produced a non-finite loss.
    NonFiniteLoss { epoch: usize, batch: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected} features, found {found}")
            }
            Error::DuplicateClaimId(id) => write!(f, "duplicate claim_id {id}"),
            Error::NonFiniteLoss { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch index {batch}")
            }
        }
    }
}

impl core::error::Error for Error {}
