//! Error taxonomy shared by every module in the crate.
//!
//! Errors are split by *who is at fault*: [`Error::Domain`] means the caller
//! passed an argument outside the documented domain, [`Error::Data`] means an
//! input file or record could not be used, [`Error::Numeric`] means an
//! internal iteration failed to converge, and [`Error::DegenerateEvidence`]
//! means the requested quantity is not defined for the supplied operating
//! characteristics (for example a likelihood ratio at power exactly 1).
//! The CLI maps each variant to a stable process exit code.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failures surfaced by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input file, record, or manifest is malformed or unusable.
    #[error("data error: {0}")]
    Data(String),

    /// An iterative numeric routine failed to converge within its cap.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Operating characteristics admit no finite evidence measure.
    #[error("degenerate evidence: {0}")]
    DegenerateEvidence(String),

    /// Underlying I/O failure while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable process exit code used by the command-line interface.
    ///
    /// `2` for usage/domain problems, `3` for bad input data or I/O,
    /// `4` for numeric non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::DegenerateEvidence(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}
