//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix had the wrong size for the operation.
    DimensionMismatch {
        /// What was being checked.
        what: &'static str,
        /// Size the operation required.
        expected: usize,
        /// Size it was given.
        got: usize,
    },
    /// A parameter was outside its documented range.
    InvalidParameter {
        /// Which parameter.
        what: &'static str,
        /// Human-readable reason.
        detail: String,
    },
    /// The normal equations were singular and no regularization was allowed.
    IllPosedFit,
    /// Training produced a non-finite loss or non-finite weights.
    Diverged,
    /// An input collection that must be non-empty was empty.
    Empty {
        /// Which collection.
        what: &'static str,
    },
    /// An exhaustive procedure was asked to run above its hard size limit.
    TooLarge {
        /// Which quantity exceeded the limit.
        what: &'static str,
        /// The hard limit.
        limit: usize,
        /// The requested size.
        got: usize,
    },
    /// Input data was degenerate for the requested statistic.
    Degenerate {
        /// What made the input unusable.
        what: &'static str,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, got } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, got {got}")
            }
            Error::InvalidParameter { what, detail } => {
                write!(f, "invalid {what}: {detail}")
            }
            Error::IllPosedFit => write!(f, "ill-posed fit"),
            Error::Diverged => write!(f, "training diverged"),
            Error::Empty { what } => write!(f, "{what} is empty"),
            Error::TooLarge { what, limit, got } => {
                write!(f, "{what} too large for exhaustive check: limit {limit}, got {got}")
            }
            Error::Degenerate { what } => write!(f, "degenerate input: {what}"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter { what, detail: detail.into() }
}

pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Error {
    Error::DimensionMismatch { what, expected, got }
}
