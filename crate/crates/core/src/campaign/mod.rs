//! Iterative optimization campaigns.
//!
//! A campaign runs numbered rounds of candidates. Each round passes a
//! three-question gate before generation, then [`advance`] folds it into
//! the global target tracker and returns the verdict for the next step.
//! Docking setup is locked after the baseline and checked every round.
//! The module performs no chemistry; every metric arrives as a number.

mod config;
mod diagnostics;
mod docking;
mod report;
mod strategy;
mod tracker;

pub use crate::bench::Direction;
pub use config::{read_candidates_csv, read_rounds_csv, CampaignConfig};
pub use diagnostics::{
    admet_alarm, first_marginal_stop, marginal_gain_stop, select_screening_tier, tanimoto_budget,
    AdmetFlag, BudgetStatus,
};
pub use docking::{
    consensus_pocket, BoxLadder, BoxStep, DockingParams, PocketConsensus, BOX_FLOOR, BOX_LADDER,
};
pub use report::{render_final_report, render_run_log, trajectory_csv, CampaignRun, RoundOutcome};
pub use strategy::{
    round_gate, schedule_strategy, CitedDatum, GateVerdict, Phase, Strategy, SuccessMetric,
    ThreeAnswers,
};
pub use tracker::{
    advance, metric_deltas, select_best, Advance, CandidateRecord, CandidateSource, Constraint,
    ConstraintOp, ConvergenceRule, GlobalTargetTracker, Objective, RoundRecord, Rules, Verdict,
};

use thiserror::Error;

/// Slack for threshold comparisons on reported decimals.
pub const THRESHOLD_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CampaignError {
    #[error("round {got} does not follow round {last}")]
    IndexGap { last: u32, got: u32 },
    #[error("box edge {0} is below the {BOX_FLOOR} floor")]
    BelowFloor(f64),
    #[error("pocket center {0:?} is degenerate")]
    DegenerateCenter([f64; 3]),
    #[error("docking parameters are locked")]
    AlreadyLocked,
    #[error("docking parameters differ from the locked record: {0}")]
    ParamDrift(String),
    #[error("library is empty")]
    EmptyLibrary,
    #[error("negative probability {value} for {endpoint}")]
    NegativeProbability { endpoint: String, value: f64 },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("no values supplied")]
    EmptyInput,
    #[error("endpoint {0} is missing from one of the profiles")]
    MissingEndpoint(String),
    #[error("candidate {smiles} has no {metric} value")]
    MissingMetric { smiles: String, metric: String },
    #[error("config: {0}")]
    Config(String),
}
