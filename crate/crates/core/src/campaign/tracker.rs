//! Candidates, rounds and the global target tracker.

use super::strategy::{schedule_strategy, Strategy, ThreeAnswers};
use super::{CampaignError, Direction, THRESHOLD_EPS};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CandidateSource {
    Generator,
    AgentDesigned,
    Manual,
}

impl fmt::Display for CandidateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateSource::Generator => "generator",
            CandidateSource::AgentDesigned => "agent",
            CandidateSource::Manual => "manual",
        })
    }
}

impl FromStr for CandidateSource {
    type Err = CampaignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "generator" | "reinvent" => Ok(CandidateSource::Generator),
            "agent" | "agent_designed" | "agentdesigned" => Ok(CandidateSource::AgentDesigned),
            "manual" => Ok(CandidateSource::Manual),
            other => Err(CampaignError::Config(format!(
                "unknown candidate source {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOp {
    AtLeast,
    AtMost,
}

/// A hard constraint on one metric, e.g. `tanimoto_to_start >= 0.40`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub metric: String,
    pub op: ConstraintOp,
    pub threshold: f64,
}

impl Constraint {
    pub fn at_least(metric: &str, threshold: f64) -> Self {
        Constraint {
            metric: metric.to_string(),
            op: ConstraintOp::AtLeast,
            threshold,
        }
    }

    pub fn at_most(metric: &str, threshold: f64) -> Self {
        Constraint {
            metric: metric.to_string(),
            op: ConstraintOp::AtMost,
            threshold,
        }
    }

    /// A missing metric never satisfies a constraint.
    pub fn satisfied(&self, metrics: &BTreeMap<String, f64>) -> bool {
        match (metrics.get(&self.metric), self.op) {
            (Some(v), ConstraintOp::AtLeast) => *v >= self.threshold,
            (Some(v), ConstraintOp::AtMost) => *v <= self.threshold,
            (None, _) => false,
        }
    }
}

/// What the campaign optimizes and when a candidate counts as target met.
///
/// With a baseline the threshold is a required change: minimizing a
/// docking score with threshold -2.0 and baseline -6.9 meets the target
/// at -8.9 or below.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub metric: String,
    pub direction: Direction,
    pub threshold: f64,
    pub baseline: Option<f64>,
}

impl Objective {
    pub fn value(&self, c: &CandidateRecord) -> Option<f64> {
        c.metrics.get(&self.metric).copied()
    }

    pub fn better(&self, a: f64, b: f64) -> bool {
        self.direction.better(a, b)
    }

    pub fn meets_target(&self, v: f64) -> bool {
        let x = match self.baseline {
            Some(b) => v - b,
            None => v,
        };
        match self.direction {
            Direction::Maximize => x >= self.threshold - THRESHOLD_EPS,
            Direction::Minimize => x <= self.threshold + THRESHOLD_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub smiles: String,
    pub metrics: BTreeMap<String, f64>,
    pub source: CandidateSource,
    pub qualifying: bool,
    pub target_met: bool,
}

impl CandidateRecord {
    /// Builds a record and derives both flags.
    pub fn assess(
        smiles: &str,
        metrics: BTreeMap<String, f64>,
        source: CandidateSource,
        constraints: &[Constraint],
        objective: &Objective,
    ) -> Self {
        let qualifying = constraints.iter().all(|c| c.satisfied(&metrics));
        let target_met = qualifying
            && metrics
                .get(&objective.metric)
                .is_some_and(|v| objective.meets_target(*v));
        CandidateRecord {
            smiles: smiles.to_string(),
            metrics,
            source,
            qualifying,
            target_met,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub index: u32,
    pub strategy: Strategy,
    pub answers: Option<ThreeAnswers>,
    pub candidates: Vec<CandidateRecord>,
    /// Best qualifying candidate; None when nothing qualified.
    pub best: Option<CandidateRecord>,
    /// Best minus previous best, per shared metric.
    pub delta_vs_prev: BTreeMap<String, f64>,
}

/// Best qualifying candidate under `objective`; the first one wins ties.
pub fn select_best<'a>(
    candidates: &'a [CandidateRecord],
    objective: &Objective,
) -> Option<&'a CandidateRecord> {
    let mut best: Option<(&CandidateRecord, f64)> = None;
    for c in candidates.iter().filter(|c| c.qualifying) {
        let Some(v) = objective.value(c) else {
            continue;
        };
        if best.is_none_or(|(_, bv)| objective.better(v, bv)) {
            best = Some((c, v));
        }
    }
    best.map(|(c, _)| c)
}

pub fn metric_deltas(best: &CandidateRecord, prev: &CandidateRecord) -> BTreeMap<String, f64> {
    best.metrics
        .iter()
        .filter_map(|(k, v)| prev.metrics.get(k).map(|p| (k.clone(), v - p)))
        .collect()
}

impl RoundRecord {
    /// Derives strategy, best and deltas from the candidates.
    pub fn new(
        index: u32,
        answers: Option<ThreeAnswers>,
        candidates: Vec<CandidateRecord>,
        objective: &Objective,
        prev_best: Option<&CandidateRecord>,
    ) -> Self {
        let best = select_best(&candidates, objective).cloned();
        let delta_vs_prev = match (&best, prev_best) {
            (Some(b), Some(p)) => metric_deltas(b, p),
            _ => BTreeMap::new(),
        };
        RoundRecord {
            index,
            strategy: schedule_strategy(index),
            answers,
            candidates,
            best,
            delta_vs_prev,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTargetTracker {
    pub objective: Objective,
    pub target_met_count: u32,
    pub required: u32,
    pub best_ever: Option<CandidateRecord>,
    /// Rounds since best_ever last improved.
    pub stagnation: u32,
    pub max_rounds: u32,
    /// (round, smiles) of each counted target-met molecule.
    pub target_met: Vec<(u32, String)>,
}

impl GlobalTargetTracker {
    pub fn new(objective: Objective, required: u32, max_rounds: u32) -> Self {
        GlobalTargetTracker {
            objective,
            target_met_count: 0,
            required,
            best_ever: None,
            stagnation: 0,
            max_rounds,
            target_met: Vec::new(),
        }
    }

    /// Seeds best_ever with the baseline molecule so round 1 must beat it.
    pub fn with_baseline(mut self, baseline: CandidateRecord) -> Self {
        self.best_ever = Some(baseline);
        self
    }

    fn counted(&self) -> BTreeSet<&str> {
        self.target_met.iter().map(|(_, s)| s.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRule {
    /// Relative change of the round best below which a round is flat.
    pub rel_change: f64,
    pub consecutive: u32,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        ConvergenceRule {
            rel_change: 0.05,
            consecutive: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rules {
    /// None disables the convergence stop.
    pub convergence: Option<ConvergenceRule>,
    /// Stagnant rounds per pivot.
    pub pivot_after: u32,
    /// Set by the planner when it declares a trade-off frontier.
    pub tradeoff_declared: bool,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            convergence: Some(ConvergenceRule::default()),
            pivot_after: 3,
            tradeoff_declared: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Continue,
    /// Advisory: explore a different modifiable position.
    Pivot,
    StopSuccess,
    StopConverged,
    StopResourceLimit,
    StopTradeoff,
}

impl Verdict {
    pub fn is_stop(self) -> bool {
        !matches!(self, Verdict::Continue | Verdict::Pivot)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advance {
    pub tracker: GlobalTargetTracker,
    pub verdict: Verdict,
    /// Stopped without reaching the required count.
    pub failure: bool,
    /// Seed for the next round: this round's best.
    pub seed: Option<CandidateRecord>,
}

fn converged(
    history: &[RoundRecord],
    new_round: &RoundRecord,
    objective: &Objective,
    rule: &ConvergenceRule,
) -> bool {
    let n = rule.consecutive as usize;
    let bests: Vec<Option<f64>> = history
        .iter()
        .chain(std::iter::once(new_round))
        .map(|r| r.best.as_ref().and_then(|b| objective.value(b)))
        .collect();
    if n == 0 || bests.len() < n + 1 {
        return false;
    }
    bests[bests.len() - n - 1..]
        .windows(2)
        .all(|w| match (w[0], w[1]) {
            (Some(prev), Some(cur)) if prev != 0.0 => ((cur - prev) / prev).abs() < rule.rel_change,
            _ => false,
        })
}

/// Folds one round into the tracker.
///
/// Stop verdicts take precedence in the order success, trade-off,
/// resource limit, convergence; a pivot is reported only when the
/// campaign continues.
pub fn advance(
    tracker: &GlobalTargetTracker,
    history: &[RoundRecord],
    new_round: &RoundRecord,
    rules: &Rules,
) -> Result<Advance, CampaignError> {
    let last = history.last().map(|r| r.index).unwrap_or(0);
    if new_round.index != last + 1 {
        return Err(CampaignError::IndexGap {
            last,
            got: new_round.index,
        });
    }
    let objective = &tracker.objective;
    let mut t = tracker.clone();

    let counted = tracker.counted();
    let mut fresh: Vec<&str> = Vec::new();
    for c in new_round
        .candidates
        .iter()
        .filter(|c| c.qualifying && c.target_met)
    {
        if !counted.contains(c.smiles.as_str()) && !fresh.contains(&c.smiles.as_str()) {
            fresh.push(&c.smiles);
        }
    }
    for s in fresh {
        t.target_met.push((new_round.index, s.to_string()));
    }
    t.target_met_count = t.target_met.len() as u32;

    let improved = match (&new_round.best, &tracker.best_ever) {
        (Some(b), None) => objective.value(b).is_some(),
        (Some(b), Some(prev)) => match (objective.value(b), objective.value(prev)) {
            (Some(v), Some(pv)) => objective.better(v, pv),
            (Some(_), None) => true,
            _ => false,
        },
        (None, _) => false,
    };
    if improved {
        t.best_ever = new_round.best.clone();
        t.stagnation = 0;
    } else {
        t.stagnation += 1;
    }

    let verdict = if t.target_met_count >= t.required {
        Verdict::StopSuccess
    } else if rules.tradeoff_declared {
        Verdict::StopTradeoff
    } else if new_round.index >= t.max_rounds {
        Verdict::StopResourceLimit
    } else if rules
        .convergence
        .is_some_and(|r| converged(history, new_round, objective, &r))
    {
        Verdict::StopConverged
    } else if rules.pivot_after > 0 && t.stagnation > 0 && t.stagnation % rules.pivot_after == 0 {
        Verdict::Pivot
    } else {
        Verdict::Continue
    };
    let failure = verdict.is_stop() && t.target_met_count < t.required;
    Ok(Advance {
        tracker: t,
        verdict,
        failure,
        seed: new_round.best.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective() -> Objective {
        Objective {
            metric: "score".into(),
            direction: Direction::Minimize,
            threshold: -2.0,
            baseline: Some(-6.9),
        }
    }

    fn cand(smiles: &str, score: f64) -> CandidateRecord {
        let m = BTreeMap::from([("score".to_string(), score), ("tanimoto".to_string(), 0.5)]);
        CandidateRecord::assess(
            smiles,
            m,
            CandidateSource::Manual,
            &[Constraint::at_least("tanimoto", 0.4)],
            &objective(),
        )
    }

    fn no_convergence() -> Rules {
        Rules {
            convergence: None,
            ..Rules::default()
        }
    }

    fn run(scores: &[f64], rules: &Rules, max_rounds: u32) -> Vec<Advance> {
        let mut t = GlobalTargetTracker::new(objective(), 2, max_rounds)
            .with_baseline(cand("erlotinib", -6.9));
        let mut history: Vec<RoundRecord> = Vec::new();
        let mut out = Vec::new();
        for (i, s) in scores.iter().enumerate() {
            let r = RoundRecord::new(
                i as u32 + 1,
                None,
                vec![cand(&format!("m{i}"), *s)],
                &objective(),
                history.last().and_then(|h| h.best.as_ref()),
            );
            let a = advance(&t, &history, &r, rules).unwrap();
            t = a.tracker.clone();
            history.push(r);
            out.push(a);
        }
        out
    }

    #[test]
    fn target_threshold_is_inclusive() {
        assert!(objective().meets_target(-8.9));
        assert!(!objective().meets_target(-8.8));
    }

    #[test]
    fn q3_trajectory() {
        let out = run(&[-7.4, -8.0, -8.3, -8.9, -8.4, -8.9], &no_convergence(), 15);
        let verdicts: Vec<Verdict> = out.iter().map(|a| a.verdict).collect();
        assert_eq!(&verdicts[..5], &[Verdict::Continue; 5]);
        assert_eq!(verdicts[5], Verdict::StopSuccess);
        assert_eq!(out[5].tracker.target_met_count, 2);
        assert!(!out[5].failure);
        // the R6 molecule ties best_ever, which is not an improvement
        assert_eq!(out[5].tracker.stagnation, 2);
    }

    #[test]
    fn pivot_and_gap() {
        let out = run(&[-7.4, -7.4, -7.4, -7.4], &no_convergence(), 15);
        assert_eq!(out[2].verdict, Verdict::Continue);
        assert_eq!(out[3].verdict, Verdict::Pivot);
        let t = GlobalTargetTracker::new(objective(), 2, 15);
        let r = RoundRecord::new(2, None, vec![], &objective(), None);
        assert_eq!(
            advance(&t, &[], &r, &no_convergence()),
            Err(CampaignError::IndexGap { last: 0, got: 2 })
        );
    }

    #[test]
    fn convergence_stop_when_enabled() {
        let out = run(&[-7.4, -7.5, -7.6], &Rules::default(), 15);
        assert_eq!(out[1].verdict, Verdict::Continue);
        assert_eq!(out[2].verdict, Verdict::StopConverged);
        assert!(out[2].failure);
    }

    #[test]
    fn duplicate_smiles_counted_once() {
        let obj = objective();
        let t = GlobalTargetTracker::new(obj.clone(), 2, 15);
        let r = RoundRecord::new(1, None, vec![cand("x", -9.5), cand("x", -9.5)], &obj, None);
        let a = advance(&t, &[], &r, &no_convergence()).unwrap();
        assert_eq!(a.tracker.target_met_count, 1);
    }
}
