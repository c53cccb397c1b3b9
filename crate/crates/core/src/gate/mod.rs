//! Phased execution with self-audit gates.
//!
//! Phase 0 builds a complete plan before any tool is touched. Phase 1
//! dispatches tool calls, closing each with checkpoint A and the download
//! policy. Phase 2 traces every claim back to its source in an integrity
//! table and emits a report only when every row matches.

pub mod audit;
pub mod checkpoint;
pub mod computation;
pub mod count;
pub mod engine;
pub mod funnel;
pub mod plan;
pub mod planner;
pub mod report;
pub mod runlog;

pub use audit::{
    label_claim, AuditEntry, Citation, ClaimCategory, ClaimSource, ClaimValue, LITERATURE_LABEL,
};
pub use checkpoint::{
    checkpoint_a, checkpoint_b, checkpoint_c, CheckpointKind, CheckpointReport, IntegrityRow,
    IntegrityTable, RuleViolation,
};
pub use computation::{
    select_computation_level, ComputationLevel, DeliverableTools, LevelChoice, ToolStatus,
    LITERATURE_CHECKLIST,
};
pub use count::{count_gate, count_text, CountGateRecord, CounterKind};
pub use engine::{drive, run_phase0, EngineConfig, Phase, RunOutcome};
pub use funnel::{FunnelLedger, FunnelRecord};
pub use plan::{MappingNeed, Phase0Plan, PlanField, TaskType};
pub use planner::{
    ClaimBasis, ClaimDecl, FetchTarget, LastOutcome, Planner, PlannerAction, ScriptedPlanner,
};
pub use runlog::{LogRecord, RunLog};

use crate::toollink::ToolLinkError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("invalid plan field {field}: {detail}")]
    InvalidPlanField { field: &'static str, detail: String },
    #[error("plan incomplete, missing: {}", .0.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(", "))]
    PlanIncomplete(Vec<PlanField>),
    #[error("tool action before the plan is ready: {0}")]
    PrematureToolCall(String),
    #[error("action not allowed in this phase: {0}")]
    OutOfPhase(String),
    #[error("missing source: {0}")]
    MissingSource(String),
    #[error("incomplete citation: {0}")]
    IncompleteCitation(String),
    #[error("counter {counter} cannot read this file: {detail}")]
    CounterUnsupported { counter: String, detail: String },
    #[error("file {} does not exist", .0.display())]
    FileMissing(PathBuf),
    #[error("invalid funnel record: {0}")]
    InvalidFunnel(String),
    #[error("tier {tier} recorded before tier {expected}")]
    TierOrderViolation { tier: u8, expected: u8 },
    #[error("checkpoint {kind} failed: {}", .rules.join("; "))]
    CheckpointFailed {
        kind: CheckpointKind,
        rules: Vec<String>,
    },
    #[error("blocked by download policy, not fetched: {}", .0.join(", "))]
    Blocked(Vec<String>),
    #[error("script line {line}: {detail}")]
    Script { line: usize, detail: String },
    #[error("aborted by planner: {0}")]
    Aborted(String),
    #[error("unreadable source: {0}")]
    Source(String),
    #[error(transparent)]
    Tool(#[from] ToolLinkError),
}

impl GateError {
    /// Short machine-readable kind, used in run logs.
    pub fn code(&self) -> &'static str {
        match self {
            GateError::InvalidPlanField { .. } => "invalid_plan_field",
            GateError::PlanIncomplete(_) => "plan_incomplete",
            GateError::PrematureToolCall(_) => "premature_tool_call",
            GateError::OutOfPhase(_) => "out_of_phase",
            GateError::MissingSource(_) => "missing_source",
            GateError::IncompleteCitation(_) => "incomplete_citation",
            GateError::CounterUnsupported { .. } => "counter_unsupported",
            GateError::FileMissing(_) => "file_missing",
            GateError::InvalidFunnel(_) => "invalid_funnel",
            GateError::TierOrderViolation { .. } => "tier_order_violation",
            GateError::CheckpointFailed { .. } => "checkpoint_failed",
            GateError::Blocked(_) => "blocked",
            GateError::Script { .. } => "script",
            GateError::Aborted(_) => "aborted",
            GateError::Source(_) => "source",
            GateError::Tool(e) => e.code(),
        }
    }
}
