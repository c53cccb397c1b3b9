//! The pre-execution plan.

use super::GateError;
use crate::residue::NumberingScheme;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskType {
    Screening,
    Design,
    Evaluation,
    Structural,
    ProteinDesign,
}

impl TaskType {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Screening => "screening",
            TaskType::Design => "design",
            TaskType::Evaluation => "evaluation",
            TaskType::Structural => "structural",
            TaskType::ProteinDesign => "protein_design",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskType {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        [
            TaskType::Screening,
            TaskType::Design,
            TaskType::Evaluation,
            TaskType::Structural,
            TaskType::ProteinDesign,
        ]
        .into_iter()
        .find(|t| t.as_str() == norm)
        .ok_or_else(|| GateError::InvalidPlanField {
            field: "task_type",
            detail: format!("unknown task type {s:?}"),
        })
    }
}

/// The six analysis steps, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanField {
    TaskType,
    Constraints,
    ExecutionPath,
    FileCollection,
    Mapping,
    MustCompute,
}

impl PlanField {
    pub const ALL: [PlanField; 6] = [
        PlanField::TaskType,
        PlanField::Constraints,
        PlanField::ExecutionPath,
        PlanField::FileCollection,
        PlanField::Mapping,
        PlanField::MustCompute,
    ];

    /// Script keyword.
    pub fn as_str(self) -> &'static str {
        match self {
            PlanField::TaskType => "task_type",
            PlanField::Constraints => "constraints",
            PlanField::ExecutionPath => "path",
            PlanField::FileCollection => "files",
            PlanField::Mapping => "mapping",
            PlanField::MustCompute => "compute",
        }
    }
}

impl fmt::Display for PlanField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlanField {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlanField::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| GateError::InvalidPlanField {
                field: "plan",
                detail: format!("unknown plan field {s:?}"),
            })
    }
}

/// Residue numbering translation planned for the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingNeed {
    NotNeeded,
    Needed {
        from: NumberingScheme,
        to: NumberingScheme,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Phase0Plan {
    pub task_type: Option<TaskType>,
    pub hard_constraints: Option<Vec<String>>,
    pub soft_constraints: Option<Vec<String>>,
    pub execution_path: Option<Vec<String>>,
    /// Stage name to expected output files.
    pub file_collection_needs: Option<BTreeMap<String, Vec<String>>>,
    pub mapping: Option<MappingNeed>,
    pub must_compute: Option<Vec<String>>,
    ready: bool,
}

fn list(text: &str) -> Vec<String> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("none") {
        return Vec::new();
    }
    t.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl Phase0Plan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_ready(&self) -> bool {
        self.ready
    }

    /// Fields not yet populated.
    pub fn missing(&self) -> Vec<PlanField> {
        PlanField::ALL
            .into_iter()
            .filter(|f| match f {
                PlanField::TaskType => self.task_type.is_none(),
                PlanField::Constraints => {
                    self.hard_constraints.is_none() || self.soft_constraints.is_none()
                }
                PlanField::ExecutionPath => self.execution_path.as_ref().is_none_or(Vec::is_empty),
                PlanField::FileCollection => self.file_collection_needs.is_none(),
                PlanField::Mapping => self.mapping.is_none(),
                PlanField::MustCompute => self.must_compute.is_none(),
            })
            .collect()
    }

    /// Marks the plan ready once nothing is missing.
    pub fn mark_ready(&mut self) -> Result<(), GateError> {
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(GateError::PlanIncomplete(missing));
        }
        self.ready = true;
        Ok(())
    }

    pub fn mapping_gate_armed(&self) -> bool {
        matches!(self.mapping, Some(MappingNeed::Needed { .. }))
    }

    /// Fills one field from its script text.
    ///
    /// * `task_type`: `screening`
    /// * `constraints`: `hard=a,b;soft=c`
    /// * `path`: `prepare,dock,rank`
    /// * `files`: `dock:pose.pdbqt+log.txt,rank:ranking.csv` or `none`
    /// * `mapping`: `none` or `pdb:A->uniprot`
    /// * `compute`: `docking_score,count` or `none`
    pub fn fill(&mut self, field: PlanField, text: &str) -> Result<(), GateError> {
        let bad = |detail: String| GateError::InvalidPlanField {
            field: field.as_str(),
            detail,
        };
        match field {
            PlanField::TaskType => self.task_type = Some(text.parse()?),
            PlanField::Constraints => {
                let mut hard = None;
                let mut soft = None;
                for part in text.split(';') {
                    let Some((k, v)) = part.split_once('=') else {
                        return Err(bad(format!("expected hard=...;soft=..., got {part:?}")));
                    };
                    match k.trim() {
                        "hard" => hard = Some(list(v)),
                        "soft" => soft = Some(list(v)),
                        other => return Err(bad(format!("unknown constraint class {other:?}"))),
                    }
                }
                match (hard, soft) {
                    (Some(h), Some(s)) => {
                        self.hard_constraints = Some(h);
                        self.soft_constraints = Some(s);
                    }
                    _ => return Err(bad("both hard and soft constraints are required".into())),
                }
            }
            PlanField::ExecutionPath => {
                let stages = list(text);
                if stages.is_empty() {
                    return Err(bad("execution path has no stages".into()));
                }
                self.execution_path = Some(stages);
            }
            PlanField::FileCollection => {
                let mut needs = BTreeMap::new();
                for entry in list(text) {
                    let (stage, files) = entry
                        .split_once(':')
                        .ok_or_else(|| bad(format!("expected stage:file+file, got {entry:?}")))?;
                    let files: Vec<String> = files
                        .split('+')
                        .map(str::trim)
                        .filter(|f| !f.is_empty())
                        .map(String::from)
                        .collect();
                    needs.insert(stage.trim().to_string(), files);
                }
                self.file_collection_needs = Some(needs);
            }
            PlanField::Mapping => {
                let t = text.trim();
                self.mapping = Some(if t.eq_ignore_ascii_case("none") {
                    MappingNeed::NotNeeded
                } else {
                    let (from, to) = t
                        .split_once("->")
                        .ok_or_else(|| bad(format!("expected from->to, got {t:?}")))?;
                    let parse = |s: &str| {
                        s.trim()
                            .parse::<NumberingScheme>()
                            .map_err(|e| bad(e.to_string()))
                    };
                    MappingNeed::Needed {
                        from: parse(from)?,
                        to: parse(to)?,
                    }
                });
            }
            PlanField::MustCompute => self.must_compute = Some(list(text)),
        }
        Ok(())
    }

    /// One line per field, for logs and reports.
    pub fn summary(&self) -> Vec<(PlanField, String)> {
        let join = |v: &Option<Vec<String>>| {
            v.as_ref()
                .map(|v| v.join(","))
                .unwrap_or_else(|| "-".into())
        };
        let files = self
            .file_collection_needs
            .as_ref()
            .map(|m| {
                if m.is_empty() {
                    "none".to_string()
                } else {
                    m.iter()
                        .map(|(s, f)| format!("{s}:{}", f.join("+")))
                        .collect::<Vec<_>>()
                        .join(",")
                }
            })
            .unwrap_or_else(|| "-".into());
        let mapping = match self.mapping {
            None => "-".to_string(),
            Some(MappingNeed::NotNeeded) => "none".to_string(),
            Some(MappingNeed::Needed { from, to }) => format!("{from}->{to}"),
        };
        vec![
            (
                PlanField::TaskType,
                self.task_type
                    .map(|t| t.to_string())
                    .unwrap_or_else(|| "-".into()),
            ),
            (
                PlanField::Constraints,
                format!(
                    "hard={};soft={}",
                    join(&self.hard_constraints),
                    join(&self.soft_constraints)
                ),
            ),
            (PlanField::ExecutionPath, join(&self.execution_path)),
            (PlanField::FileCollection, files),
            (PlanField::Mapping, mapping),
            (PlanField::MustCompute, join(&self.must_compute)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_all_fields() {
        let mut p = Phase0Plan::new();
        assert_eq!(p.missing().len(), 6);
        p.fill(PlanField::TaskType, "structural").unwrap();
        p.fill(PlanField::Constraints, "hard=registered tools only;soft=")
            .unwrap();
        p.fill(PlanField::ExecutionPath, "fetch,reconstruct,frames")
            .unwrap();
        p.fill(
            PlanField::FileCollection,
            "reconstruct:ensemble.pdb+log.txt",
        )
        .unwrap();
        assert!(matches!(p.mark_ready(), Err(GateError::PlanIncomplete(ref m)) if m.len() == 2));
        p.fill(PlanField::Mapping, "pdb:A->uniprot").unwrap();
        p.fill(PlanField::MustCompute, "none").unwrap();
        p.mark_ready().unwrap();
        assert!(p.is_ready() && p.mapping_gate_armed());
        assert_eq!(p.summary()[3].1, "reconstruct:ensemble.pdb+log.txt");
        assert!(p.fill(PlanField::Constraints, "hard=a").is_err());
        assert!(p.fill(PlanField::TaskType, "cooking").is_err());
    }
}
