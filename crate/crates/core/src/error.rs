use thiserror::Error;

/// Errors raised by the model-averaging library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation precondition (dimensions, ranges).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The design matrix is (numerically) rank deficient.
    #[error("singular design: smallest Gram eigenvalue {lambda_min:e} below {threshold:e}")]
    DesignSingular { lambda_min: f64, threshold: f64 },
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Requested computation is not supported for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
