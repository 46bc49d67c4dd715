//! Error taxonomy shared by every module.
//!
//! Four families, matching how callers react: bad wiring (`Config`), bad
//! values (`Domain`), an exact computation that would not fit the enumeration
//! budget (`Budget`), and a scan that ran out of road (`SearchExhausted`).

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Inconsistent configuration (mismatched lengths, bad parameter wiring).
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside its admissible range, or an operation applied to an
    /// input it is not defined for.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exact enumeration would exceed its budget.
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    /// An upward scan hit its cap without finding a witness.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }
}
