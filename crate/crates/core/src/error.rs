use thiserror::Error;

/// Errors raised by cutoff computation, model construction and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation. The message names
    /// the offending parameter.
    #[error("{0}")]
    Domain(String),

    /// The requested cutoff does not exist (tail probability outside (0,1)
    /// or k larger than the number of hypotheses).
    #[error("infeasible cutoff: {0}")]
    InfeasibleCutoff(String),

    /// Correlation matrix could not be factorized.
    #[error("factorization failed: {0}")]
    Factorization(String),

    /// A factor loading of +/-1 leaves no idiosyncratic noise to condition on.
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    /// The estimator needs a single-factor model but got something else.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by invalid user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::InfeasibleCutoff(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
