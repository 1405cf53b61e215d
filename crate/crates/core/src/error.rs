use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Hurst parameter {0} outside [0.5, 1)")]
    InvalidHurst(f64),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("split node {split} leaves an empty window on a grid with {steps} steps")]
    EmptyWindow { split: usize, steps: usize },
    #[error("node {node} must lie strictly after split node {split}")]
    NodeNotAfterSplit { node: usize, split: usize },
    #[error("covariance matrix not positive definite at leading minor {minor}")]
    NotPositiveDefinite { minor: usize },
    #[error("exact-law oracle limited to {cap} steps, got {steps}")]
    OracleTooLarge { steps: usize, cap: usize },
    #[error("integrand is not flagged deterministic")]
    NotDeterministic,
    #[error("invalid integrand: {0}")]
    InvalidIntegrand(String),
    #[error("delay {eps} is shorter than one grid step {step}")]
    DelayBelowStep { eps: f64, step: f64 },
    #[error("invalid rebalance schedule: {0}")]
    InvalidSchedule(String),
    #[error("rule read node {node} at node {now}, permitted window ends at node {latest}")]
    AccessViolation { node: usize, now: usize, latest: usize },
    #[error("rule produced a non-finite position at node {now}")]
    NonFinitePosition { now: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
