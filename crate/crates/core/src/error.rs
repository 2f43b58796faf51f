use thiserror::Error;

use crate::groups::GroupSpec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group of order {order} exceeds the enumeration cap {cap}")]
    CapExceeded { order: u128, cap: u64 },

    #[error("objects live on different groups: {left} vs {right}")]
    GroupMismatch { left: GroupSpec, right: GroupSpec },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("the zero function has no normalized spectrum")]
    ZeroFunction,

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("operation requires a cyclic group of prime order, got {0}")]
    NotPrimeCyclic(GroupSpec),

    #[error("operation requires a vector-space group, got {0}")]
    NotVectorSpace(GroupSpec),

    #[error("radius {delta} is too large for an exact annihilator (must be < {limit})")]
    RadiusTooLarge { delta: f64, limit: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("dissociated set grew past the exhaustive-check cap of {cap} characters")]
    DissociativityCap { cap: usize },

    #[error("size cap exceeded: {what} would need {size} (cap {cap})")]
    SizeCap {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("no progression found after {attempts} attempts")]
    NoProgressionFound { attempts: usize },

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("internal invariant failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),
}
