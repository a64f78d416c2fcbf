use thiserror::Error;

use crate::ingest::EventId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("duplicate center code `{0}`")]
    DuplicateCode(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("header mismatch: {0}")]
    Header(String),

    #[error("event {0} is already populated in the base dataset")]
    EventAlreadyPresent(EventId),

    /// A statistic has no value for the given input (constant series, empty
    /// group, zero denominator, ...).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        Error::Undefined(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for rejections caused by the input data itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MalformedRow { .. }
                | Error::DuplicateCode(_)
                | Error::UnknownColumn(_)
                | Error::Header(_)
                | Error::EventAlreadyPresent(_)
                | Error::Csv(_)
                | Error::Io(_)
        )
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Error::Undefined(_))
    }
}
