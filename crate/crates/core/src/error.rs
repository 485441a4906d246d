use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs violate a documented precondition (bad parameters, mismatched
    /// grids, points outside a domain).
    #[error("input error: {0}")]
    Input(String),

    /// The integrand or a derived quantity broke a structural axiom
    /// (e.g. monotonicity in `t`) while it was being evaluated.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// The request is well-formed but not supported by this implementation.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A text file (fieldv1 / curvev1) could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
