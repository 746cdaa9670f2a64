use thiserror::Error;

use crate::model::{Diagnostic, ModelKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model failed validation with {} diagnostic(s)", .0.len())]
    Invalid(Vec<Diagnostic>),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("state index {0} out of range")]
    StateOutOfRange(usize),

    #[error("operation requires a {expected} model, got {got}")]
    UnsupportedKind { expected: &'static str, got: ModelKind },

    #[error("infeasible uncertainty row: {0}")]
    InfeasibleRow(String),

    #[error("non-finite value passed to an inner problem")]
    NonFiniteValue,

    #[error("row at ({state}, {action}) is not graph preserving")]
    NotGraphPreserving { state: String, action: String },

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("guard exceeded: {what} ({count} > {limit})")]
    GuardExceeded { what: &'static str, count: u128, limit: u128 },

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("document error: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
