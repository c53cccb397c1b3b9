//! Benchmark scoring by exact canonical-text comparison.

use super::BenchError;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    PropertyFiltering,
    SimilarityRetrieval,
    AffinityPair,
    DockingRanking,
    Editing,
    PropertyOptimization,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::PropertyFiltering,
        TaskKind::SimilarityRetrieval,
        TaskKind::AffinityPair,
        TaskKind::DockingRanking,
        TaskKind::Editing,
        TaskKind::PropertyOptimization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::PropertyFiltering => "property_filtering",
            TaskKind::SimilarityRetrieval => "similarity_retrieval",
            TaskKind::AffinityPair => "affinity_pair",
            TaskKind::DockingRanking => "docking_ranking",
            TaskKind::Editing => "editing",
            TaskKind::PropertyOptimization => "property_optimization",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        TaskKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| BenchError::Input(format!("unknown task kind {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Maximize => "maximize",
            Direction::Minimize => "minimize",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "maximize" | "max" => Ok(Direction::Maximize),
            "minimize" | "min" => Ok(Direction::Minimize),
            other => Err(BenchError::Input(format!("unknown direction {other}"))),
        }
    }
}

/// Ground truth for one item.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    /// Property filtering: the exact set of qualifying molecules.
    Set(BTreeSet<String>),
    /// Similarity retrieval, affinity pair and editing: one canonical answer.
    Single(String),
    /// Docking ranking: the candidate pool and its active subset.
    Ranking {
        pool: Vec<String>,
        actives: BTreeSet<String>,
    },
    /// Property optimization: starting value and the success threshold.
    Optimization {
        baseline: f64,
        threshold: f64,
        direction: Direction,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkItem {
    pub id: String,
    pub kind: TaskKind,
    pub truth: Truth,
}

impl BenchmarkItem {
    /// Checks the payload shape against the kind.
    pub fn check(&self) -> Result<(), String> {
        match (&self.kind, &self.truth) {
            (TaskKind::PropertyFiltering, Truth::Set(_)) => Ok(()),
            (
                TaskKind::SimilarityRetrieval | TaskKind::AffinityPair | TaskKind::Editing,
                Truth::Single(_),
            ) => Ok(()),
            (TaskKind::DockingRanking, Truth::Ranking { pool, actives }) => {
                let pool: BTreeSet<&String> = pool.iter().collect();
                match actives.iter().find(|a| !pool.contains(a)) {
                    Some(a) => Err(format!("active {a} is not in the candidate pool")),
                    None => Ok(()),
                }
            }
            (TaskKind::PropertyOptimization, Truth::Optimization { .. }) => Ok(()),
            (kind, _) => Err(format!("payload does not fit kind {kind}")),
        }
    }
}

/// A model answer for one item.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Set(BTreeSet<String>),
    Single(String),
    /// Predicted ranking, best first.
    Ranking(Vec<String>),
    /// Achieved objective value.
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub kind: TaskKind,
    pub n_items: usize,
    /// Absent for ranking and optimization tasks.
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub hits_at_3: Option<f64>,
    pub delta: Option<f64>,
    pub success_rate: Option<f64>,
}

fn set_f1(pred: &BTreeSet<String>, truth: &BTreeSet<String>) -> f64 {
    if pred.is_empty() && truth.is_empty() {
        return 1.0;
    }
    let inter = pred.intersection(truth).count() as f64;
    2.0 * inter / (pred.len() + truth.len()) as f64
}

/// Number of actives among the first three predicted entries.
pub fn hits_at_3(ranking: &[String], actives: &BTreeSet<String>) -> usize {
    let mut seen = BTreeSet::new();
    ranking
        .iter()
        .filter(|c| seen.insert(c.as_str()))
        .take(3)
        .filter(|c| actives.contains(*c))
        .count()
}

/// Scores aligned predictions against a homogeneous item list.
pub fn evaluate_benchmark(
    items: &[BenchmarkItem],
    predictions: &[Prediction],
) -> Result<MetricReport, BenchError> {
    if items.len() != predictions.len() {
        return Err(BenchError::LengthMismatch {
            items: items.len(),
            predictions: predictions.len(),
        });
    }
    let kind = match items.first() {
        Some(item) => item.kind,
        None => return Err(BenchError::Input("no benchmark items".into())),
    };
    let mut report = MetricReport {
        kind,
        n_items: items.len(),
        accuracy: None,
        f1: None,
        hits_at_3: None,
        delta: None,
        success_rate: None,
    };
    let n = items.len() as f64;
    let mut correct = 0usize;
    let mut f1_sum = 0.0;
    let mut hits = 0usize;
    let mut delta_sum = 0.0;
    let mut successes = 0usize;

    for (index, (item, pred)) in items.iter().zip(predictions).enumerate() {
        if item.kind != kind {
            return Err(BenchError::KindMismatch {
                index,
                detail: format!("expected {kind}, found {}", item.kind),
            });
        }
        item.check()
            .map_err(|detail| BenchError::KindMismatch { index, detail })?;
        match (&item.truth, pred) {
            (Truth::Set(truth), Prediction::Set(p)) => {
                if p == truth {
                    correct += 1;
                }
                f1_sum += set_f1(p, truth);
            }
            (Truth::Single(truth), Prediction::Single(p)) => {
                if p == truth {
                    correct += 1;
                }
            }
            (Truth::Ranking { actives, .. }, Prediction::Ranking(r)) => {
                hits += hits_at_3(r, actives);
            }
            (
                Truth::Optimization {
                    baseline,
                    threshold,
                    direction,
                },
                Prediction::Value(v),
            ) => {
                let (gain, ok) = match direction {
                    Direction::Maximize => (v - baseline, *v >= *threshold),
                    Direction::Minimize => (baseline - v, *v <= *threshold),
                };
                delta_sum += gain;
                if ok {
                    successes += 1;
                }
            }
            _ => {
                return Err(BenchError::KindMismatch {
                    index,
                    detail: "prediction shape does not fit the item".into(),
                })
            }
        }
    }

    match kind {
        TaskKind::PropertyFiltering => {
            report.accuracy = Some(correct as f64 / n);
            report.f1 = Some(f1_sum / n);
        }
        TaskKind::SimilarityRetrieval | TaskKind::AffinityPair | TaskKind::Editing => {
            report.accuracy = Some(correct as f64 / n);
        }
        TaskKind::DockingRanking => report.hits_at_3 = Some(hits as f64 / n),
        TaskKind::PropertyOptimization => {
            report.delta = Some(delta_sum / n);
            report.success_rate = Some(successes as f64 / n);
        }
    }
    Ok(report)
}

/// Weighted rubric on the 0-2 point scale, normalized to [0, 1].
pub fn rubric_score(scores: &[(f64, u8)]) -> Result<f64, BenchError> {
    let total: f64 = scores.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 || scores.iter().any(|(w, _)| *w < 0.0) {
        return Err(BenchError::WeightSumInvalid(total));
    }
    let mut acc = 0.0;
    for (w, points) in scores {
        if *points > 2 {
            return Err(BenchError::PointsOutOfRange(*points));
        }
        acc += w * (*points as f64) / 2.0;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn filtering_partial_set() {
        let items = vec![BenchmarkItem {
            id: "1".into(),
            kind: TaskKind::PropertyFiltering,
            truth: Truth::Set(set(&["A", "B"])),
        }];
        let r = evaluate_benchmark(&items, &[Prediction::Set(set(&["A"]))]).unwrap();
        assert_eq!(r.accuracy, Some(0.0));
        assert!((r.f1.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn docking_zero_hits() {
        let items = vec![BenchmarkItem {
            id: "1".into(),
            kind: TaskKind::DockingRanking,
            truth: Truth::Ranking {
                pool: ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect(),
                actives: set(&["d"]),
            },
        }];
        let pred = Prediction::Ranking(vec!["a".into(), "b".into(), "c".into(), "d".into()]);
        let r = evaluate_benchmark(&items, &[pred]).unwrap();
        assert_eq!(r.hits_at_3, Some(0.0));
        assert_eq!(r.accuracy, None);
    }

    #[test]
    fn actives_must_be_in_pool() {
        let items = vec![BenchmarkItem {
            id: "1".into(),
            kind: TaskKind::DockingRanking,
            truth: Truth::Ranking {
                pool: vec!["a".into()],
                actives: set(&["z"]),
            },
        }];
        let err = evaluate_benchmark(&items, &[Prediction::Ranking(vec![])]).unwrap_err();
        assert!(matches!(err, BenchError::KindMismatch { index: 0, .. }));
    }

    #[test]
    fn optimization_delta_and_success() {
        let mk = |b, t| BenchmarkItem {
            id: "x".into(),
            kind: TaskKind::PropertyOptimization,
            truth: Truth::Optimization {
                baseline: b,
                threshold: t,
                direction: Direction::Maximize,
            },
        };
        let items = vec![mk(0.5, 0.7), mk(0.4, 0.6)];
        let r =
            evaluate_benchmark(&items, &[Prediction::Value(0.8), Prediction::Value(0.5)]).unwrap();
        assert!((r.delta.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(r.success_rate, Some(0.5));
    }

    #[test]
    fn length_and_kind_mismatch() {
        let a = BenchmarkItem {
            id: "1".into(),
            kind: TaskKind::Editing,
            truth: Truth::Single("C".into()),
        };
        let mut b = a.clone();
        b.kind = TaskKind::AffinityPair;
        assert!(matches!(
            evaluate_benchmark(&[a.clone()], &[]),
            Err(BenchError::LengthMismatch { .. })
        ));
        let preds = vec![Prediction::Single("C".into()); 2];
        assert!(matches!(
            evaluate_benchmark(&[a, b], &preds),
            Err(BenchError::KindMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn rubric_cases() {
        assert_eq!(rubric_score(&[(0.5, 2), (0.5, 2)]).unwrap(), 1.0);
        assert!((rubric_score(&[(0.5, 1), (0.5, 2)]).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            rubric_score(&[(0.5, 2)]),
            Err(BenchError::WeightSumInvalid(_))
        ));
        assert!(matches!(
            rubric_score(&[(1.0, 3)]),
            Err(BenchError::PointsOutOfRange(3))
        ));
    }
}
