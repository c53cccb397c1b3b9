//! Campaign configuration (TOML) and round tables (CSV).
//!
//! ```toml
//! similarity_threshold = 0.40          # shorthand for a >= constraint
//! [objective]
//! metric = "score_kcal_mol"
//! direction = "minimize"
//! threshold = -2.0
//! baseline = -6.9                      # makes the threshold a change
//! required = 2
//! max_rounds = 15
//! [rules]
//! convergence = false
//! [docking]
//! center = [22.014, 0.253, 52.794]
//! box = [25.0, 25.0, 25.0]
//! engine = "quickvina"
//! ```

use super::docking::DockingParams;
use super::tracker::{
    CandidateRecord, CandidateSource, Constraint, ConstraintOp, ConvergenceRule, Objective,
    RoundRecord, Rules,
};
use super::{CampaignError, Direction};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::io::Read;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    metric: String,
    direction: String,
    threshold: f64,
    baseline: Option<f64>,
    required: u32,
    max_rounds: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    metric: String,
    op: String,
    threshold: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRules {
    convergence: Option<bool>,
    convergence_rel_change: Option<f64>,
    convergence_rounds: Option<u32>,
    pivot_after: Option<u32>,
    tradeoff_declared: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocking {
    center: [f64; 3],
    #[serde(rename = "box")]
    box_size: [f64; 3],
    engine: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    smiles: String,
    #[serde(default)]
    metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    similarity_threshold: Option<f64>,
    similarity_metric: Option<String>,
    objective: RawObjective,
    #[serde(default)]
    constraint: Vec<RawConstraint>,
    #[serde(default)]
    rules: RawRules,
    docking: Option<RawDocking>,
    baseline: Option<RawBaseline>,
    #[serde(default)]
    modification_map: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub name: String,
    pub objective: Objective,
    pub required: u32,
    pub max_rounds: u32,
    pub constraints: Vec<Constraint>,
    /// Metric reported in the tanimoto column of the trajectory.
    pub similarity_metric: String,
    pub rules: Rules,
    /// Locked on load.
    pub docking: Option<DockingParams>,
    pub baseline: Option<CandidateRecord>,
    pub modification_map: Vec<String>,
}

fn cfg(msg: impl Into<String>) -> CampaignError {
    CampaignError::Config(msg.into())
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, CampaignError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
        let direction: Direction = raw.objective.direction.parse().map_err(|_| {
            cfg(format!(
                "objective direction must be maximize or minimize, got {:?}",
                raw.objective.direction
            ))
        })?;
        if raw.objective.required == 0 || raw.objective.max_rounds == 0 {
            return Err(cfg("required and max_rounds must be positive"));
        }
        let objective = Objective {
            metric: raw.objective.metric,
            direction,
            threshold: raw.objective.threshold,
            baseline: raw.objective.baseline,
        };
        let similarity_metric = raw
            .similarity_metric
            .unwrap_or_else(|| "tanimoto_to_start".to_string());
        let mut constraints = Vec::new();
        if let Some(t) = raw.similarity_threshold {
            constraints.push(Constraint::at_least(&similarity_metric, t));
        }
        for c in raw.constraint {
            let op = match c.op.trim() {
                ">=" => ConstraintOp::AtLeast,
                "<=" => ConstraintOp::AtMost,
                other => {
                    return Err(cfg(format!(
                        "constraint op must be >= or <=, got {other:?}"
                    )))
                }
            };
            constraints.push(Constraint {
                metric: c.metric,
                op,
                threshold: c.threshold,
            });
        }
        let defaults = ConvergenceRule::default();
        let convergence = match raw.rules.convergence {
            Some(false) => None,
            _ => Some(ConvergenceRule {
                rel_change: raw
                    .rules
                    .convergence_rel_change
                    .unwrap_or(defaults.rel_change),
                consecutive: raw.rules.convergence_rounds.unwrap_or(defaults.consecutive),
            }),
        };
        let rules = Rules {
            convergence,
            pivot_after: raw.rules.pivot_after.unwrap_or(3),
            tradeoff_declared: raw.rules.tradeoff_declared.unwrap_or(false),
        };
        let docking = raw
            .docking
            .map(|d| DockingParams::new(d.center, d.box_size, &d.engine).lock())
            .transpose()?;
        let baseline = raw.baseline.map(|b| {
            CandidateRecord::assess(
                &b.smiles,
                b.metrics,
                CandidateSource::Manual,
                &constraints,
                &objective,
            )
        });
        Ok(CampaignConfig {
            name: raw.name.unwrap_or_else(|| "campaign".to_string()),
            objective,
            required: raw.objective.required,
            max_rounds: raw.objective.max_rounds,
            constraints,
            similarity_metric,
            rules,
            docking,
            baseline,
            modification_map: raw.modification_map,
        })
    }

    pub fn assess(
        &self,
        smiles: &str,
        metrics: BTreeMap<String, f64>,
        source: CandidateSource,
    ) -> CandidateRecord {
        CandidateRecord::assess(smiles, metrics, source, &self.constraints, &self.objective)
    }
}

/// Reads `round,smiles[,source],<metric>...` rows, grouped by round.
/// Empty metric cells leave the metric absent.
pub fn read_candidates_csv<R: Read>(
    reader: R,
    config: &CampaignConfig,
) -> Result<BTreeMap<u32, Vec<CandidateRecord>>, CampaignError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| cfg(format!("rounds: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let round_col = col("round").ok_or_else(|| cfg("rounds: missing round column"))?;
    let smiles_col = col("smiles").ok_or_else(|| cfg("rounds: missing smiles column"))?;
    let source_col = col("source");
    let metric_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != round_col && *i != smiles_col && Some(*i) != source_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut by_round: BTreeMap<u32, Vec<CandidateRecord>> = BTreeMap::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| cfg(format!("rounds: {e}")))?;
        let at = || format!("rounds row {}", line + 2);
        let round: u32 = row[round_col]
            .parse()
            .map_err(|_| cfg(format!("{}: bad round {:?}", at(), &row[round_col])))?;
        let source = match source_col {
            Some(i) if !row[i].is_empty() => row[i].parse()?,
            _ => CandidateSource::Generator,
        };
        let mut metrics = BTreeMap::new();
        for (i, name) in &metric_cols {
            let cell = &row[*i];
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| cfg(format!("{}: {name} is not a number: {cell:?}", at())))?;
            metrics.insert(name.clone(), v);
        }
        by_round
            .entry(round)
            .or_default()
            .push(config.assess(&row[smiles_col], metrics, source));
    }
    Ok(by_round)
}

/// Reads a round table into round records. Rounds must be numbered
/// 1, 2, ... without gaps.
pub fn read_rounds_csv<R: Read>(
    reader: R,
    config: &CampaignConfig,
) -> Result<Vec<RoundRecord>, CampaignError> {
    let by_round = read_candidates_csv(reader, config)?;
    let mut rounds: Vec<RoundRecord> = Vec::new();
    for (expected, (index, candidates)) in (1u32..).zip(by_round) {
        if index != expected {
            return Err(CampaignError::IndexGap {
                last: expected - 1,
                got: index,
            });
        }
        let prev = rounds
            .iter()
            .rev()
            .find_map(|r| r.best.as_ref())
            .or(config.baseline.as_ref());
        let r = RoundRecord::new(index, None, candidates, &config.objective, prev);
        rounds.push(r);
    }
    Ok(rounds)
}
