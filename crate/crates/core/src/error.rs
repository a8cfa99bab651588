use thiserror::Error;

use crate::quadrature::QuadError;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or profile failed validation at construction.
    #[error("invalid model: {0}")]
    Model(String),

    /// An adaptive integral did not reach its tolerance.
    #[error("{context}: {source}")]
    Quadrature {
        context: String,
        #[source]
        source: QuadError,
    },

    /// A root, bracket or fit could not be completed.
    #[error("computation failed: {0}")]
    Computation(String),

    /// Missing or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn quad(context: impl Into<String>, source: QuadError) -> Self {
        Error::Quadrature {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
