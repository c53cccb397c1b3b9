//! CSV ingestion for benchmark truth and prediction files.
//!
//! Truth headers per kind:
//!
//! - property_filtering: `item_id,smiles`, one row per member (an empty
//!   `smiles` cell declares an item whose set is empty)
//! - similarity_retrieval, affinity_pair, editing: `item_id,answer`
//! - docking_ranking: `item_id,candidate,active_flag,rank_truth`
//! - property_optimization: `item_id,baseline,threshold,direction`
//!
//! Predictions are `item_id,prediction`. Set and ranking predictions span
//! several rows; rankings keep file order unless a `rank` column is given.
//! Items without any prediction row count as empty answers.

use super::metrics::{BenchmarkItem, Direction, Prediction, TaskKind, Truth};
use super::BenchError;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

type Rows = Vec<BTreeMap<String, String>>;

fn read_rows<R: Read>(reader: R) -> Result<Rows, BenchError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| BenchError::Input(e.to_string()))?
        .clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| BenchError::Input(e.to_string()))?;
        let row = headers
            .iter()
            .zip(rec.iter())
            .map(|(h, v)| (h.to_string(), v.to_string()));
        rows.push(row.collect());
    }
    Ok(rows)
}

fn field<'a>(row: &'a BTreeMap<String, String>, name: &str) -> Result<&'a str, BenchError> {
    row.get(name)
        .map(String::as_str)
        .ok_or_else(|| BenchError::Input(format!("missing column {name}")))
}

fn number(row: &BTreeMap<String, String>, name: &str) -> Result<f64, BenchError> {
    let raw = field(row, name)?;
    raw.parse()
        .map_err(|_| BenchError::Input(format!("column {name}: not a number: {raw}")))
}

fn parse_flag(raw: &str) -> Result<bool, BenchError> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "active" => Ok(true),
        "0" | "false" | "no" | "inactive" | "" => Ok(false),
        other => Err(BenchError::Input(format!("bad active_flag {other}"))),
    }
}

/// Loads truth items in order of first appearance.
pub fn read_truth<R: Read>(kind: TaskKind, reader: R) -> Result<Vec<BenchmarkItem>, BenchError> {
    let rows = read_rows(reader)?;
    let mut order: Vec<String> = Vec::new();
    let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut singles: BTreeMap<String, String> = BTreeMap::new();
    let mut rankings: BTreeMap<String, (Vec<(f64, String)>, BTreeSet<String>)> = BTreeMap::new();
    let mut optim: BTreeMap<String, (f64, f64, Direction)> = BTreeMap::new();

    for row in &rows {
        let id = field(row, "item_id")?.to_string();
        let first = !order.contains(&id);
        if first {
            order.push(id.clone());
        }
        match kind {
            TaskKind::PropertyFiltering => {
                let entry = sets.entry(id).or_default();
                let smi = field(row, "smiles")?;
                if !smi.is_empty() {
                    entry.insert(smi.to_string());
                }
            }
            TaskKind::SimilarityRetrieval | TaskKind::AffinityPair | TaskKind::Editing => {
                if !first {
                    return Err(BenchError::Input(format!("item {id} appears twice")));
                }
                singles.insert(id, field(row, "answer")?.to_string());
            }
            TaskKind::DockingRanking => {
                let (pool, actives) = rankings.entry(id).or_default();
                let cand = field(row, "candidate")?.to_string();
                let rank = match row.get("rank_truth").map(String::as_str) {
                    Some("") | None => f64::INFINITY,
                    Some(r) => r
                        .parse()
                        .map_err(|_| BenchError::Input(format!("bad rank_truth {r}")))?,
                };
                if parse_flag(field(row, "active_flag")?)? {
                    actives.insert(cand.clone());
                }
                pool.push((rank, cand));
            }
            TaskKind::PropertyOptimization => {
                if !first {
                    return Err(BenchError::Input(format!("item {id} appears twice")));
                }
                let direction = match field(row, "direction")?.to_ascii_lowercase().as_str() {
                    "max" | "maximize" => Direction::Maximize,
                    "min" | "minimize" => Direction::Minimize,
                    other => return Err(BenchError::Input(format!("bad direction {other}"))),
                };
                optim.insert(
                    id,
                    (
                        number(row, "baseline")?,
                        number(row, "threshold")?,
                        direction,
                    ),
                );
            }
        }
    }

    let items = order
        .into_iter()
        .map(|id| {
            let truth = match kind {
                TaskKind::PropertyFiltering => Truth::Set(sets.remove(&id).unwrap_or_default()),
                TaskKind::SimilarityRetrieval | TaskKind::AffinityPair | TaskKind::Editing => {
                    Truth::Single(singles.remove(&id).unwrap_or_default())
                }
                TaskKind::DockingRanking => {
                    let (mut pool, actives) = rankings.remove(&id).unwrap_or_default();
                    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Truth::Ranking {
                        pool: pool.into_iter().map(|(_, c)| c).collect(),
                        actives,
                    }
                }
                TaskKind::PropertyOptimization => {
                    let (baseline, threshold, direction) = optim[&id];
                    Truth::Optimization {
                        baseline,
                        threshold,
                        direction,
                    }
                }
            };
            BenchmarkItem { id, kind, truth }
        })
        .collect();
    Ok(items)
}

/// Loads predictions aligned to `items`.
pub fn read_predictions<R: Read>(
    items: &[BenchmarkItem],
    reader: R,
) -> Result<Vec<Prediction>, BenchError> {
    let rows = read_rows(reader)?;
    let index: BTreeMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(i, it)| (it.id.as_str(), i))
        .collect();
    let mut grouped: Vec<Vec<(f64, usize, String)>> = vec![Vec::new(); items.len()];
    for (line, row) in rows.iter().enumerate() {
        let id = field(row, "item_id")?;
        let &i = index
            .get(id)
            .ok_or_else(|| BenchError::Input(format!("prediction for unknown item {id}")))?;
        let rank = match row.get("rank").map(String::as_str) {
            Some("") | None => f64::INFINITY,
            Some(r) => r
                .parse()
                .map_err(|_| BenchError::Input(format!("bad rank {r}")))?,
        };
        grouped[i].push((rank, line, field(row, "prediction")?.to_string()));
    }

    items
        .iter()
        .zip(grouped)
        .map(|(item, mut rows)| {
            rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let values = rows.into_iter().map(|(_, _, v)| v);
            Ok(match item.kind {
                TaskKind::PropertyFiltering => {
                    Prediction::Set(values.filter(|v| !v.is_empty()).collect())
                }
                TaskKind::SimilarityRetrieval | TaskKind::AffinityPair | TaskKind::Editing => {
                    let all: Vec<String> = values.collect();
                    if all.len() > 1 {
                        return Err(BenchError::Input(format!(
                            "item {} has {} predictions",
                            item.id,
                            all.len()
                        )));
                    }
                    Prediction::Single(all.into_iter().next().unwrap_or_default())
                }
                TaskKind::DockingRanking => Prediction::Ranking(values.collect()),
                TaskKind::PropertyOptimization => {
                    let all: Vec<String> = values.collect();
                    match all.as_slice() {
                        [v] => Prediction::Value(v.parse().map_err(|_| {
                            BenchError::Input(format!("item {}: bad value {v}", item.id))
                        })?),
                        _ => {
                            return Err(BenchError::Input(format!(
                                "item {} needs exactly one predicted value",
                                item.id
                            )))
                        }
                    }
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filtering_sets_group_rows() {
        let truth = "item_id,smiles\n1,CCO\n1,CCN\n2,\n";
        let items = read_truth(TaskKind::PropertyFiltering, truth.as_bytes()).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[1].truth, Truth::Set(BTreeSet::new()));
        let pred = "item_id,prediction\n1,CCN\n1,CCO\n";
        let preds = read_predictions(&items, pred.as_bytes()).unwrap();
        assert_eq!(preds[1], Prediction::Set(BTreeSet::new()));
        let r = super::super::evaluate_benchmark(&items, &preds).unwrap();
        assert_eq!(r.accuracy, Some(1.0));
    }

    #[test]
    fn ranking_uses_rank_column() {
        let truth = "item_id,candidate,active_flag,rank_truth\nq,a,1,1\nq,b,0,\nq,c,1,2\n";
        let items = read_truth(TaskKind::DockingRanking, truth.as_bytes()).unwrap();
        let pred = "item_id,prediction,rank\nq,c,2\nq,b,3\nq,a,1\n";
        let preds = read_predictions(&items, pred.as_bytes()).unwrap();
        assert_eq!(
            preds[0],
            Prediction::Ranking(vec!["a".into(), "c".into(), "b".into()])
        );
    }

    #[test]
    fn unknown_prediction_item() {
        let items = read_truth(TaskKind::Editing, "item_id,answer\n1,C\n".as_bytes()).unwrap();
        assert!(read_predictions(&items, "item_id,prediction\n9,C\n".as_bytes()).is_err());
    }
}
