//! Benchmark metrics, statistical tests and QED aggregation.

pub mod files;
pub mod metrics;
pub mod qed;
pub mod special;
pub mod stats;

pub use metrics::{
    evaluate_benchmark, hits_at_3, rubric_score, BenchmarkItem, Direction, MetricReport,
    Prediction, TaskKind, Truth,
};
pub use qed::{qed_ceiling, qed_score, QedLabel, QedWeights};
pub use stats::{
    adjust_pvalues, cohens_h, fisher_exact, friedman, mann_whitney, wilson_ci, Adjustment,
    FriedmanResult, Sidedness, StatResult,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("matrix cell missing at method {method}, task {task}")]
    MissingCell { method: usize, task: usize },
    #[error("need at least {needed} methods, got {got}")]
    TooFewMethods { needed: usize, got: usize },
    #[error("need at least 2 tasks, got {0}")]
    TooFewTasks(usize),
    #[error("sample is empty")]
    EmptySample,
    #[error("predictions ({predictions}) and items ({items}) differ in length")]
    LengthMismatch { items: usize, predictions: usize },
    #[error("item {index}: {detail}")]
    KindMismatch { index: usize, detail: String },
    #[error("rubric weights sum to {0}, expected 1")]
    WeightSumInvalid(f64),
    #[error("rubric points must be 0, 1 or 2, got {0}")]
    PointsOutOfRange(u8),
    #[error("component {0} has nonpositive desirability")]
    NonpositiveComponent(String),
    #[error("unknown QED component label {0}")]
    UnknownLabel(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("{0}")]
    Input(String),
}
