use thiserror::Error;

use crate::model::ValidationIssue;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {} issue(s), first: {}", .0.len(), .0.first().map(|i| i.to_string()).unwrap_or_default())]
    InvalidInstance(Vec<ValidationIssue>),

    /// A solution refers to an entity the instance does not define.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("cost undefined: solution violates {0} hard constraint(s)")]
    CostUndefined(usize),

    #[error("no operators")]
    NoOperators,

    #[error("oracle limits exceeded: {0}")]
    LimitsExceeded(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
