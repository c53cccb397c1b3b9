//! Round scheduling and the three-question gate.

use super::tracker::RoundRecord;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Exploration,
    Targeted,
    Convergence,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    pub phase: Phase,
    /// Tanimoto similarity to the seed.
    pub similarity_band: (f64, f64),
    /// Molecules per round.
    pub batch_size_band: (u32, u32),
}

/// Rounds 1-2 explore, 3-4 target, 5 onward converge. Round 0 is treated
/// as round 1.
pub fn schedule_strategy(round_index: u32) -> Strategy {
    match round_index {
        0..=2 => Strategy {
            phase: Phase::Exploration,
            similarity_band: (0.4, 0.5),
            batch_size_band: (30, 50),
        },
        3 | 4 => Strategy {
            phase: Phase::Targeted,
            similarity_band: (0.6, 0.7),
            batch_size_band: (10, 20),
        },
        _ => Strategy {
            phase: Phase::Convergence,
            similarity_band: (0.8, 1.0),
            batch_size_band: (5, 10),
        },
    }
}

/// A prior-round value the hypothesis builds on. Round 0 is the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct CitedDatum {
    pub round: u32,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessMetric {
    pub metric: String,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeAnswers {
    pub improve_what: String,
    pub cited: Option<CitedDatum>,
    pub strategy_why: String,
    pub success_metric: SuccessMetric,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateVerdict {
    Pass,
    Fail(Vec<String>),
}

impl GateVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, GateVerdict::Pass)
    }
}

const GENERIC: [&str; 8] = [
    "continue optimizing",
    "continue optimization",
    "keep optimizing",
    "keep going",
    "optimize further",
    "improve the molecule",
    "improve the molecules",
    "try something different",
];

fn is_generic(text: &str) -> bool {
    let norm: String = text
        .to_lowercase()
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c == ' ' {
                c
            } else {
                ' '
            }
        })
        .collect();
    let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
    norm.is_empty() || GENERIC.contains(&norm.as_str())
}

fn datum_present(
    d: &CitedDatum,
    history: &[RoundRecord],
    baseline: &BTreeMap<String, f64>,
) -> bool {
    let close = |v: f64| (v - d.value).abs() <= 1e-9 * d.value.abs().max(1.0);
    if d.round == 0 {
        return baseline.get(&d.metric).is_some_and(|v| close(*v));
    }
    history.iter().filter(|r| r.index == d.round).any(|r| {
        r.candidates
            .iter()
            .any(|c| c.metrics.get(&d.metric).is_some_and(|v| close(*v)))
            || r.delta_vs_prev.get(&d.metric).is_some_and(|v| close(*v))
    })
}

fn known_metric(metric: &str, history: &[RoundRecord], baseline: &BTreeMap<String, f64>) -> bool {
    baseline.contains_key(metric)
        || history
            .iter()
            .flat_map(|r| &r.candidates)
            .any(|c| c.metrics.contains_key(metric))
}

/// Rejects rounds whose plan is not grounded in earlier data.
pub fn round_gate(
    answers: &ThreeAnswers,
    history: &[RoundRecord],
    baseline: &BTreeMap<String, f64>,
) -> GateVerdict {
    let mut reasons = Vec::new();
    if is_generic(&answers.improve_what) {
        reasons.push(format!(
            "improve_what is generic: {:?}",
            answers.improve_what
        ));
    }
    match &answers.cited {
        None => reasons.push("improve_what cites no prior datum".to_string()),
        Some(d) if !datum_present(d, history, baseline) => reasons.push(format!(
            "cited {}={} is not present in round {}",
            d.metric, d.value, d.round
        )),
        Some(_) => {}
    }
    if is_generic(&answers.strategy_why) {
        reasons.push(format!(
            "strategy_why is generic: {:?}",
            answers.strategy_why
        ));
    }
    let sm = &answers.success_metric;
    if !sm.threshold.is_some_and(f64::is_finite) {
        reasons.push(format!(
            "success metric {} has no numeric threshold",
            sm.metric
        ));
    }
    if !known_metric(&sm.metric, history, baseline) {
        reasons.push(format!(
            "success metric {} is not a recorded metric",
            sm.metric
        ));
    }
    if reasons.is_empty() {
        GateVerdict::Pass
    } else {
        GateVerdict::Fail(reasons)
    }
}
