use thiserror::Error;

use crate::packing::SetFamily;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or array violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Rejection sampling ran out of attempts before reaching the target size.
    /// The best family found so far is carried along.
    #[error("set family reached {} of {target} members within the attempt budget", .best.members.len())]
    ConstructiveFailure { target: usize, best: Box<SetFamily> },

    /// A certificate (distance floor, radius cap, sparsity) failed verification.
    #[error("certificate violated: {0}")]
    Certificate(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),

    #[error("operator-norm tail diverges: {0}")]
    DivergentTail(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
