//! The three self-audit checkpoints.
//!
//! A runs after each tool call on the response and its files. B
//! re-derives a round summary from the round's source table. C builds the
//! integrity table that must match row for row before a report is written.

use super::GateError;
use crate::campaign::{
    metric_deltas, read_candidates_csv, select_best, CampaignConfig, CandidateRecord, RoundRecord,
};
use crate::toollink::{
    enforce_download_policy, FileArtifact, PolicyDecision, ResponseStatus, ToolDescriptor,
    ToolResponse, DOCKING_UNIT, PROBABILITY_UNIT,
};
use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckpointKind {
    A,
    B,
    C,
}

impl fmt::Display for CheckpointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub const RULE_SCORE_SIGN: &str = "docking score sign";
pub const RULE_PROBABILITY: &str = "probability range";
pub const RULE_DOWNLOADED: &str = "files downloaded";
pub const RULE_NONZERO: &str = "nonzero file size";
pub const RULE_CONFIDENCE: &str = "confidence threshold";
pub const RULE_STATUS: &str = "tool status";
pub const RULE_COUNT: &str = "molecule count";
pub const RULE_METRICS: &str = "candidate metrics";
pub const RULE_SELECTED: &str = "selected candidate";
pub const RULE_DELTA: &str = "change vs previous round";
pub const RULE_INTEGRITY: &str = "integrity mismatch";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RuleViolation {
    pub rule: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointReport {
    pub kind: CheckpointKind,
    pub violations: Vec<RuleViolation>,
    /// Set for checkpoint C.
    pub table: Option<IntegrityTable>,
}

impl CheckpointReport {
    fn new(kind: CheckpointKind, violations: Vec<RuleViolation>) -> Self {
        CheckpointReport {
            kind,
            violations,
            table: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct violated rules, in order of first appearance.
    pub fn rules(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for v in &self.violations {
            if !out.contains(&v.rule) {
                out.push(v.rule);
            }
        }
        out
    }

    pub fn into_result(self) -> Result<CheckpointReport, GateError> {
        if self.passed() {
            Ok(self)
        } else {
            Err(GateError::CheckpointFailed {
                kind: self.kind,
                rules: self
                    .violations
                    .iter()
                    .map(|v| format!("{}: {}", v.rule, v.detail))
                    .collect(),
            })
        }
    }
}

/// Keys treated as probabilities even without a unit tag.
pub fn is_probability_key(key: &str) -> bool {
    let k = key.to_ascii_lowercase();
    k == "probability"
        || k.starts_with("prob_")
        || k.ends_with("_prob")
        || k.ends_with("_probability")
}

/// Checkpoint A for one response.
///
/// The sign rule applies only to values whose descriptor declares the
/// docking unit. Probability bounds apply to the probability unit and to
/// probability-named keys. `confidence` maps output keys to minimum values.
pub fn checkpoint_a(
    response: &ToolResponse,
    descriptor: Option<&ToolDescriptor>,
    artifacts: &[FileArtifact],
    confidence: &BTreeMap<String, f64>,
) -> CheckpointReport {
    let mut v = Vec::new();
    if response.status == ResponseStatus::ToolError {
        v.push(RuleViolation {
            rule: RULE_STATUS,
            detail: response.error_detail.clone().unwrap_or_default(),
        });
    }
    for (key, value) in &response.values {
        let unit = descriptor.and_then(|d| d.unit_of(key));
        let x = value.as_f64();
        if unit == Some(DOCKING_UNIT) {
            match x {
                Some(s) if s < 0.0 => {}
                _ => v.push(RuleViolation {
                    rule: RULE_SCORE_SIGN,
                    detail: format!("{key} = {value} is not negative"),
                }),
            }
        }
        if unit == Some(PROBABILITY_UNIT) || is_probability_key(key) {
            match x {
                Some(p) if (0.0..=1.0).contains(&p) => {}
                _ => v.push(RuleViolation {
                    rule: RULE_PROBABILITY,
                    detail: format!("{key} = {value} is outside [0, 1]"),
                }),
            }
        }
        if let Some(min) = confidence.get(key) {
            match x {
                Some(c) if c >= *min => {}
                _ => v.push(RuleViolation {
                    rule: RULE_CONFIDENCE,
                    detail: format!("{key} = {value} is below {min}"),
                }),
            }
        }
    }
    for (key, min) in confidence {
        if response.status == ResponseStatus::Ok
            && descriptor.is_some_and(|d| d.outputs.contains_key(key))
            && !response.values.contains_key(key)
        {
            v.push(RuleViolation {
                rule: RULE_CONFIDENCE,
                detail: format!("{key} missing, minimum {min}"),
            });
        }
    }
    if let PolicyDecision::Blocked(paths) = enforce_download_policy(response, artifacts) {
        for p in paths {
            v.push(RuleViolation {
                rule: RULE_DOWNLOADED,
                detail: p,
            });
        }
    }
    for a in artifacts
        .iter()
        .filter(|a| response.file_paths.contains(&a.remote_path))
    {
        if a.fetched && a.local_size_bytes == 0 {
            v.push(RuleViolation {
                rule: RULE_NONZERO,
                detail: a.remote_path.clone(),
            });
        }
    }
    CheckpointReport::new(CheckpointKind::A, v)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn metrics_equal(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> bool {
    a.len() == b.len()
        && a.iter()
            .all(|(k, v)| b.get(k).is_some_and(|w| same(*v, *w)))
}

/// Checkpoint B: re-reads the round's rows from `source_csv` and compares
/// the candidate count, every candidate's metrics and flags, the selected
/// best and the change against `prev_best`.
pub fn checkpoint_b(
    round: &RoundRecord,
    source_csv: &str,
    config: &CampaignConfig,
    prev_best: Option<&CandidateRecord>,
) -> Result<CheckpointReport, GateError> {
    let by_round = read_candidates_csv(source_csv.as_bytes(), config)
        .map_err(|e| GateError::Source(e.to_string()))?;
    let fresh = by_round.get(&round.index).cloned().unwrap_or_default();
    let mut v = Vec::new();
    if fresh.len() != round.candidates.len() {
        v.push(RuleViolation {
            rule: RULE_COUNT,
            detail: format!(
                "summary has {}, file has {}",
                round.candidates.len(),
                fresh.len()
            ),
        });
    }
    for c in &round.candidates {
        match fresh.iter().find(|f| f.smiles == c.smiles) {
            None => v.push(RuleViolation {
                rule: RULE_METRICS,
                detail: format!("{} not in file", c.smiles),
            }),
            Some(f)
                if !metrics_equal(&f.metrics, &c.metrics)
                    || f.qualifying != c.qualifying
                    || f.target_met != c.target_met =>
            {
                v.push(RuleViolation {
                    rule: RULE_METRICS,
                    detail: format!("{} differs from file", c.smiles),
                })
            }
            Some(_) => {}
        }
    }
    let best = select_best(&fresh, &config.objective);
    let best_matches = match (best, &round.best) {
        (None, None) => true,
        (Some(a), Some(b)) => a.smiles == b.smiles && metrics_equal(&a.metrics, &b.metrics),
        _ => false,
    };
    if !best_matches {
        v.push(RuleViolation {
            rule: RULE_SELECTED,
            detail: format!(
                "summary selects {}, file selects {}",
                round
                    .best
                    .as_ref()
                    .map(|b| b.smiles.as_str())
                    .unwrap_or("nothing"),
                best.map(|b| b.smiles.as_str()).unwrap_or("nothing")
            ),
        });
    }
    let deltas = match (best, prev_best) {
        (Some(b), Some(p)) => metric_deltas(b, p),
        _ => BTreeMap::new(),
    };
    if !metrics_equal(&deltas, &round.delta_vs_prev) {
        v.push(RuleViolation {
            rule: RULE_DELTA,
            detail: "deltas differ from file".into(),
        });
    }
    Ok(CheckpointReport::new(CheckpointKind::B, v))
}

/// One reported value traced to its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityRow {
    pub claim_id: String,
    pub claimed: String,
    pub source_file: String,
    pub verification: String,
    pub actual: String,
    pub matched: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntegrityTable {
    pub rows: Vec<IntegrityRow>,
}

impl IntegrityTable {
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(|r| r.matched)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &IntegrityRow> {
        self.rows.iter().filter(|r| !r.matched)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("| claim | claimed | source | verification | actual | match |\n|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                r.claim_id,
                r.claimed,
                r.source_file,
                r.verification,
                r.actual,
                if r.matched { "yes" } else { "NO" }
            );
        }
        out
    }
}

/// Checkpoint C: passes only when every row matches.
pub fn checkpoint_c(table: IntegrityTable) -> CheckpointReport {
    let v = table
        .mismatches()
        .map(|r| RuleViolation {
            rule: RULE_INTEGRITY,
            detail: format!("{}: claimed {}, actual {}", r.claim_id, r.claimed, r.actual),
        })
        .collect();
    CheckpointReport {
        kind: CheckpointKind::C,
        violations: v,
        table: Some(table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toollink::{ArgKind, Category};
    use serde_json::json;

    fn docking() -> ToolDescriptor {
        ToolDescriptor::new("mock_docking")
            .arg("smiles", ArgKind::Text, true)
            .output("score", Some(DOCKING_UNIT), -12.0, -4.0)
            .output("prob_herg", Some(PROBABILITY_UNIT), 0.0, 1.0)
            .file("pose.pdbqt", Category::A)
    }

    fn resp(score: f64, prob: f64) -> ToolResponse {
        let mut r = ToolResponse::ok("mock_docking");
        r.values.insert("score".into(), json!(score));
        r.values.insert("prob_herg".into(), json!(prob));
        r
    }

    #[test]
    fn checkpoint_a_rules() {
        let none = BTreeMap::new();
        assert!(checkpoint_a(&resp(-8.3, 0.2), Some(&docking()), &[], &none).passed());
        assert_eq!(
            checkpoint_a(&resp(1.2, 0.2), Some(&docking()), &[], &none).rules(),
            vec![RULE_SCORE_SIGN]
        );
        assert_eq!(
            checkpoint_a(&resp(-8.3, 1.2), Some(&docking()), &[], &none).rules(),
            vec![RULE_PROBABILITY]
        );
        // without a unit tag a positive "score" is not a docking score
        assert!(checkpoint_a(&resp(1.2, 0.2), None, &[], &none).passed());
        let mut with_file = resp(-8.3, 0.2);
        with_file
            .file_paths
            .push("/scp/mock_docking/x/pose.pdbqt".into());
        let pending = FileArtifact::pending("/scp/mock_docking/x/pose.pdbqt", Category::A);
        assert_eq!(
            checkpoint_a(&with_file, Some(&docking()), &[pending.clone()], &none).rules(),
            vec![RULE_DOWNLOADED]
        );
        let fetched = FileArtifact {
            fetched: true,
            local_size_bytes: 10,
            ..pending
        };
        assert!(checkpoint_a(&with_file, Some(&docking()), &[fetched], &none).passed());
        let conf = BTreeMap::from([("prob_herg".to_string(), 0.5)]);
        assert_eq!(
            checkpoint_a(&resp(-8.3, 0.2), Some(&docking()), &[], &conf).rules(),
            vec![RULE_CONFIDENCE]
        );
    }

    #[test]
    fn checkpoint_c_blocks_on_mismatch() {
        let row = |id: &str, matched| IntegrityRow {
            claim_id: id.into(),
            claimed: "25".into(),
            source_file: "ensemble.pdb".into(),
            verification: "pdb_models".into(),
            actual: "20".into(),
            matched,
        };
        assert!(checkpoint_c(IntegrityTable {
            rows: vec![row("a", true)]
        })
        .passed());
        let rep = checkpoint_c(IntegrityTable {
            rows: vec![row("a", true), row("n", false)],
        });
        assert!(!rep.passed());
        assert!(rep
            .table
            .as_ref()
            .unwrap()
            .render()
            .contains("| n | 25 | ensemble.pdb | pdb_models | 20 | NO |"));
        assert!(matches!(
            rep.into_result(),
            Err(GateError::CheckpointFailed {
                kind: CheckpointKind::C,
                ..
            })
        ));
    }

    #[test]
    fn checkpoint_b_rederives() {
        let cfg = CampaignConfig::from_toml(
            "similarity_threshold = 0.4\n[objective]\nmetric = \"score\"\ndirection = \"minimize\"\nthreshold = -2.0\nbaseline = -6.9\nrequired = 2\nmax_rounds = 15\n",
        )
        .unwrap();
        let csv = "round,smiles,score,tanimoto_to_start\n1,A,-7.4,0.6\n1,B,-7.1,0.5\n";
        let rounds = crate::campaign::read_rounds_csv(csv.as_bytes(), &cfg).unwrap();
        assert!(checkpoint_b(&rounds[0], csv, &cfg, None).unwrap().passed());
        let mut forged = rounds[0].clone();
        forged.candidates[0].metrics.insert("score".into(), -9.4);
        forged.best = Some(forged.candidates[0].clone());
        let rep = checkpoint_b(&forged, csv, &cfg, None).unwrap();
        assert_eq!(rep.rules(), vec![RULE_METRICS, RULE_SELECTED]);
        let mut short = rounds[0].clone();
        short.candidates.pop();
        assert!(checkpoint_b(&short, csv, &cfg, None)
            .unwrap()
            .rules()
            .contains(&RULE_COUNT));
    }
}
