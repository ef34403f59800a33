use thiserror::Error;

use crate::bits::Bits;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error in {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    /// An exhaustive enumeration would exceed the configured budget.
    #[error("enumeration of {needed} entries exceeds budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("measure is not exactly computable")]
    NotExact,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid functional: {0}")]
    InvalidFunctional(String),

    #[error("strategy error: {0}")]
    Strategy(String),

    #[error("construction failed at level {level}: {detail}")]
    ConstructionFailure { level: usize, detail: String },

    #[error("positivity not certified at depth {depth}")]
    NotPositive { depth: usize },

    #[error("order does not reach {target} within horizon {horizon}")]
    HorizonExceeded { target: u64, horizon: u64 },

    #[error("ambiguous: {0}")]
    Ambiguous(String),

    #[error("test component {component} violated: {reason}")]
    TestViolation { component: usize, reason: String },

    #[error("martingale is not fair at node {node}")]
    Unfair { node: Bits },

    #[error("not monotone: {0}")]
    NonMonotone(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn parse(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Parse {
            what,
            detail: detail.into(),
        }
    }
}
