use thiserror::Error;

/// Errors raised by the thermopress computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model file: {message}")]
    ModelFile {
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },

    #[error("model is not mixing: {0}")]
    NotMixing(String),

    #[error("numerical failure after {iterations} iterations: {message}")]
    NumericalFailure { iterations: usize, message: String },

    #[error("resource limit: {needed} work units needed, budget is {budget}")]
    ResourceLimit { needed: u128, budget: u128 },

    #[error("value {value} outside the approximated domain ({lo}, {hi})")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("observable is cohomologous to a constant (asymptotic variance {sigma2:e})")]
    Degenerate { sigma2: f64 },

    #[error("property violation: {0}")]
    PropertyViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
