//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario field violated one of its invariants.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A configuration file failed to parse.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// Matrix dimensions of two operands do not agree.
    #[error("dimension mismatch in {context}: {details}")]
    DimensionMismatch { context: String, details: String },

    /// A matrix expected to be (numerically) positive semi-definite was not.
    #[error("matrix not positive semi-definite in {context}: min eigenvalue {min_eig:e}")]
    NotPsd { context: String, min_eig: f64 },

    /// A linear system was singular to working precision.
    #[error("singular matrix in {context}")]
    Singular { context: String },

    /// A computed quantity left its admissible range.
    #[error("numeric failure in {context}: {details}")]
    Numeric { context: String, details: String },

    /// File I/O while reading/writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
