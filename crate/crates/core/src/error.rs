use thiserror::Error;

/// Errors raised by the kinetic solver and its diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates a structural constraint.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The initial datum is not a probability density.
    #[error("rejected initial datum: {0}")]
    Datum(String),

    /// Non-finite values appeared during time stepping.
    #[error("numerical failure at t = {t}: {reason}")]
    Numerical { t: f64, reason: String },

    /// A weight or norm left the representable range.
    #[error("norm overflow: {0}")]
    Overflow(String),

    /// A field contains NaN or infinite entries.
    #[error("non-finite field entry at k = {k}, index {index}")]
    NonFinite { k: i32, index: usize },

    /// An estimate that must hold exactly was violated.
    #[error("inequality violated: {0}")]
    Violation(String),

    /// Damping diagnostics found no decay.
    #[error("damping failure: {0}")]
    DampingFailure(String),

    /// Malformed input or output file.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
