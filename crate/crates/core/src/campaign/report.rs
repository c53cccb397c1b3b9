//! Campaign replay and the run log, final report and trajectory outputs.

use super::config::CampaignConfig;
use super::tracker::{
    advance, CandidateRecord, CandidateSource, GlobalTargetTracker, RoundRecord, Verdict,
};
use super::CampaignError;
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub index: u32,
    pub verdict: Verdict,
    pub stagnation: u32,
    pub target_met_count: u32,
}

/// Rounds folded through the tracker until the first stop verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRun {
    pub config: CampaignConfig,
    pub rounds: Vec<RoundRecord>,
    pub outcomes: Vec<RoundOutcome>,
    pub tracker: GlobalTargetTracker,
    /// Rounds supplied after the stop verdict; not evaluated.
    pub ignored_rounds: usize,
}

impl CampaignRun {
    pub fn replay(
        config: &CampaignConfig,
        rounds: Vec<RoundRecord>,
    ) -> Result<Self, CampaignError> {
        let mut tracker =
            GlobalTargetTracker::new(config.objective.clone(), config.required, config.max_rounds);
        let baseline = config.baseline.clone().or_else(|| {
            config.objective.baseline.map(|b| CandidateRecord {
                smiles: "baseline".to_string(),
                metrics: BTreeMap::from([(config.objective.metric.clone(), b)]),
                source: CandidateSource::Manual,
                qualifying: true,
                target_met: false,
            })
        });
        if let Some(b) = baseline {
            tracker = tracker.with_baseline(b);
        }
        let total = rounds.len();
        let mut done: Vec<RoundRecord> = Vec::new();
        let mut outcomes = Vec::new();
        for r in rounds {
            let a = advance(&tracker, &done, &r, &config.rules)?;
            tracker = a.tracker;
            outcomes.push(RoundOutcome {
                index: r.index,
                verdict: a.verdict,
                stagnation: tracker.stagnation,
                target_met_count: tracker.target_met_count,
            });
            done.push(r);
            if a.verdict.is_stop() {
                break;
            }
        }
        let ignored_rounds = total - done.len();
        Ok(CampaignRun {
            config: config.clone(),
            rounds: done,
            outcomes,
            tracker,
            ignored_rounds,
        })
    }

    pub fn final_verdict(&self) -> Option<Verdict> {
        self.outcomes.last().map(|o| o.verdict)
    }

    pub fn success(&self) -> bool {
        self.tracker.target_met_count >= self.tracker.required
    }

    /// `SUCCESS, rounds=N` or `FAILURE, rounds=N`.
    pub fn conclusion(&self) -> String {
        format!(
            "{}, rounds={}",
            if self.success() { "SUCCESS" } else { "FAILURE" },
            self.rounds.len()
        )
    }
}

/// Docking-like scores get one decimal, everything else three.
fn metric(name: &str, v: f64) -> String {
    if name.contains("score") {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn opt_metric(name: &str, v: Option<f64>) -> String {
    v.map(|v| metric(name, v))
        .unwrap_or_else(|| "-".to_string())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// `round,smiles,objective,tanimoto,strategy,outcome`, one row per round
/// carrying the round best.
pub fn trajectory_csv(run: &CampaignRun) -> String {
    let obj = &run.config.objective;
    let sim = &run.config.similarity_metric;
    let mut out = String::from("round,smiles,objective,tanimoto,strategy,outcome\n");
    for (r, o) in run.rounds.iter().zip(&run.outcomes) {
        let best = r.best.as_ref();
        let smiles = best.map(|b| b.smiles.as_str()).unwrap_or("");
        let smiles = if smiles.contains(',') || smiles.contains('"') {
            format!("\"{}\"", smiles.replace('"', "\"\""))
        } else {
            smiles.to_string()
        };
        let objective = best
            .and_then(|b| obj.value(b))
            .map(|v| metric(&obj.metric, v))
            .unwrap_or_default();
        let tanimoto = best
            .and_then(|b| b.metrics.get(sim))
            .map(|v| format!("{v:.3}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.index, smiles, objective, tanimoto, r.strategy.phase, o.verdict
        );
    }
    out
}

pub fn render_run_log(run: &CampaignRun) -> String {
    let obj = &run.config.objective;
    let mut out = format!("# Run log: {}\n", run.config.name);
    let metric_names: Vec<String> = {
        let mut names: Vec<String> = run
            .rounds
            .iter()
            .flat_map(|r| &r.candidates)
            .flat_map(|c| c.metrics.keys().cloned())
            .collect();
        names.sort();
        names.dedup();
        names
    };
    for (r, o) in run.rounds.iter().zip(&run.outcomes) {
        let _ = writeln!(out, "\n## Round {}\n", r.index);
        let (lo, hi) = r.strategy.similarity_band;
        let (blo, bhi) = r.strategy.batch_size_band;
        let _ = writeln!(
            out,
            "Strategy: {} (similarity {lo:.1}-{hi:.1}, batch {blo}-{bhi})",
            r.strategy.phase
        );
        let hypothesis = r
            .answers
            .as_ref()
            .map(|a| a.improve_what.as_str())
            .unwrap_or("not recorded");
        let _ = writeln!(out, "Modification hypothesis: {hypothesis}\n");
        let _ = write!(out, "| smiles | source |");
        for m in &metric_names {
            let _ = write!(out, " {m} |");
        }
        let _ = writeln!(out, " qualifying | target met |");
        let _ = writeln!(
            out,
            "|---|---|{}---|---|",
            "---|".repeat(metric_names.len())
        );
        for c in &r.candidates {
            let _ = write!(out, "| {} | {} |", c.smiles, c.source);
            for m in &metric_names {
                let _ = write!(out, " {} |", opt_metric(m, c.metrics.get(m).copied()));
            }
            let _ = writeln!(out, " {} | {} |", yes(c.qualifying), yes(c.target_met));
        }
        let sar = match &r.best {
            Some(b) => {
                let delta = r
                    .delta_vs_prev
                    .get(&obj.metric)
                    .map(|d| format!(", change vs previous best {}", metric(&obj.metric, *d)))
                    .unwrap_or_default();
                format!(
                    "best {} with {} {}{delta}",
                    b.smiles,
                    obj.metric,
                    opt_metric(&obj.metric, obj.value(b))
                )
            }
            None => "no qualifying candidate".to_string(),
        };
        let _ = writeln!(out, "\nSAR summary: {sar}");
        let _ = writeln!(
            out,
            "Round decision: {} (stagnation {}, target met {}/{})",
            o.verdict, o.stagnation, o.target_met_count, run.tracker.required
        );
    }
    out
}

pub fn render_final_report(run: &CampaignRun) -> String {
    let cfg = &run.config;
    let obj = &cfg.objective;
    let mut out = format!("# Final report: {}\n\n## Locked parameters\n\n", cfg.name);
    match &cfg.docking {
        Some(d) => {
            let c = d.center;
            let b = d.box_size;
            let _ = writeln!(out, "| parameter | value |\n|---|---|");
            let _ = writeln!(
                out,
                "| center (Å) | ({:.3}, {:.3}, {:.3}) |",
                c[0], c[1], c[2]
            );
            let _ = writeln!(out, "| box (Å) | {:.1} x {:.1} x {:.1} |", b[0], b[1], b[2]);
            let _ = writeln!(out, "| engine | {} |", d.engine_tag);
            let _ = writeln!(out, "| locked | {} |", yes(d.locked()));
        }
        None => out.push_str("No docking parameters configured.\n"),
    }
    out.push_str("\n## Modification map\n\n");
    if cfg.modification_map.is_empty() {
        out.push_str("Not supplied.\n");
    }
    for m in &cfg.modification_map {
        let _ = writeln!(out, "- {m}");
    }
    out.push_str("\n## Optimization trajectory\n\n| round | best | objective | strategy | outcome |\n|---|---|---|---|---|\n");
    for (r, o) in run.rounds.iter().zip(&run.outcomes) {
        let best = r.best.as_ref();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            r.index,
            best.map(|b| b.smiles.as_str()).unwrap_or("-"),
            opt_metric(&obj.metric, best.and_then(|b| obj.value(b))),
            r.strategy.phase,
            o.verdict
        );
    }
    let t = &run.tracker;
    let _ = writeln!(
        out,
        "\n## Global target tracker\n\ntarget met: {}/{}",
        t.target_met_count, t.required
    );
    for (round, smiles) in &t.target_met {
        let _ = writeln!(out, "- round {round}: {smiles}");
    }
    let _ = writeln!(out, "stagnation: {}", t.stagnation);
    out.push_str("\n## SAR narrative\n\n");
    for r in &run.rounds {
        match (&r.best, r.delta_vs_prev.get(&obj.metric)) {
            (Some(b), Some(d)) => {
                let _ = writeln!(
                    out,
                    "- round {}: {} changed {} by {}",
                    r.index,
                    b.smiles,
                    obj.metric,
                    metric(&obj.metric, *d)
                );
            }
            (Some(b), None) => {
                let _ = writeln!(
                    out,
                    "- round {}: {} sets the first reference",
                    r.index, b.smiles
                );
            }
            (None, _) => {
                let _ = writeln!(out, "- round {}: no qualifying candidate", r.index);
            }
        }
    }
    if run.ignored_rounds > 0 {
        let _ = writeln!(
            out,
            "\n{} supplied round(s) after termination were not evaluated.",
            run.ignored_rounds
        );
    }
    let best = t
        .best_ever
        .as_ref()
        .map(|b| {
            format!(
                "{} ({} {})",
                b.smiles,
                obj.metric,
                opt_metric(&obj.metric, obj.value(b))
            )
        })
        .unwrap_or_else(|| "-".to_string());
    let stop = run
        .final_verdict()
        .map(|v| v.to_string())
        .unwrap_or_else(|| "none".to_string());
    let _ = writeln!(
        out,
        "\n## Conclusion\n\nTermination: {stop}\nBest molecule: {best}\n\n{}",
        run.conclusion()
    );
    out
}
