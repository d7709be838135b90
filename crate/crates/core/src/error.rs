use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("instance failed validation: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Brute-force enumeration would exceed its size guard.
    #[error("instance too large for exhaustive method: {profiles} profiles exceed limit {limit}")]
    OracleScale { profiles: u128, limit: u128 },

    #[error("independence violation: receiver {receiver} appears more than once")]
    IndependenceViolation { receiver: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
