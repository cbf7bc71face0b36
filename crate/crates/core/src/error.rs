use thiserror::Error;

/// Errors raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A result does not fit in a native float; the log-polar path must be used.
    #[error("range error: {0}; use eval_log for values beyond float range")]
    Range(String),

    /// A documented precondition of the operation does not hold.
    #[error("contract violated: {0}")]
    Contract(String),

    /// The grid window does not contain the requested object.
    #[error("window error: {0}")]
    Window(String),

    #[error("origin fast escaping at this R/horizon")]
    OriginEscaping,

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
