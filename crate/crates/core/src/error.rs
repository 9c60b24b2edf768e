//! Crate-wide error type.

use thiserror::Error;

use crate::instance::StrategyViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("query index {query} out of range (workload has {n_queries} queries)")]
    QueryOutOfRange { query: usize, n_queries: usize },

    #[error("tuple index {tuple} out of range (relation has {n_tuples} tuples)")]
    TupleOutOfRange { tuple: usize, n_tuples: usize },

    #[error("invalid attack strategy: {}", format_violations(.violations))]
    InvalidStrategy { violations: Vec<StrategyViolation> },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("ingestion error at row {row}: {message}")]
    Ingest { row: u64, message: String },

    #[error("estimate vector has length {actual}, expected {expected}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("enumeration of {required} candidates exceeds cap of {cap}")]
    Capacity { required: u128, cap: u64 },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("generator spec infeasible: {0}")]
    Generation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[StrategyViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
