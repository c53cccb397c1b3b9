//! Three-tier skill library: parsing, validation and reading order.
//!
//! A skill file starts with a front-matter block:
//!
//! ```text
//! ---
//! name: docking-workflow
//! tier: L2
//! description: dock a ligand set against one receptor
//! principles: [11, 14, 17]
//! tools: [molecule_docking_quickvina_fullprocess]
//! handoff: poses|pdbqt|report-writer|A; log|txt||C
//! ---
//! body text
//! ```
//!
//! `handoff` entries are `artifact|format|consumer,consumer|category`
//! separated by `;`. Keys other than the structural ones are kept verbatim.

mod front;

pub use front::{parse_skill_document, serialize_skill_document};

use crate::toollink::artifact::Category;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    L1,
    L2,
    L3,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::L1 => "L1",
            Tier::L2 => "L2",
            Tier::L3 => "L3",
        })
    }
}

impl FromStr for Tier {
    type Err = SkillError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "L1" | "l1" => Ok(Tier::L1),
            "L2" | "l2" => Ok(Tier::L2),
            "L3" | "l3" => Ok(Tier::L3),
            other => Err(SkillError::InvalidTier(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandoffEntry {
    pub artifact_name: String,
    pub file_format: String,
    pub consumers: Vec<String>,
    pub download_category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillDocument {
    pub name: String,
    pub tier: Tier,
    /// Non-structural header keys, verbatim.
    pub metadata: BTreeMap<String, String>,
    pub body: String,
    pub referenced_principles: Vec<u32>,
    /// Tools a workflow consumes, or for an L1 document the tools it wraps.
    pub consumed_tools: Vec<String>,
    pub handoff_contract: Vec<HandoffEntry>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkillError {
    #[error("missing header: {0}")]
    MissingHeader(String),
    #[error("invalid tier {0:?}")]
    InvalidTier(String),
    #[error("malformed name {0:?}")]
    MalformedName(String),
    #[error("malformed field {key}: {detail}")]
    MalformedField { key: String, detail: String },
    #[error("{tier} document cannot declare {key}")]
    TierConflict { tier: Tier, key: String },
    #[error("unknown workflow {0}")]
    UnknownWorkflow(String),
    #[error("library has no L3 document")]
    MissingL3,
    #[error("{path}: {source}")]
    File {
        path: String,
        source: Box<SkillError>,
    },
    #[error("io error on {path}: {detail}")]
    Io { path: String, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameClass {
    SkillName,
    ToolName,
    Invalid,
}

fn words_ok(token: &str, sep: char) -> bool {
    let mut parts = token.split(sep);
    let first_ok = parts
        .clone()
        .next()
        .and_then(|w| w.chars().next())
        .is_some_and(|c| c.is_ascii_lowercase());
    first_ok
        && parts.all(|w| {
            !w.is_empty()
                && w.chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        })
}

/// Kebab-case tokens are skill names, snake_case tokens are tool names.
/// A single lowercase word carries no separator and counts as a tool name.
pub fn classify_name(token: &str) -> NameClass {
    let has_dash = token.contains('-');
    let has_under = token.contains('_');
    match (has_dash, has_under) {
        (true, true) => NameClass::Invalid,
        (true, false) if words_ok(token, '-') => NameClass::SkillName,
        (false, _) if words_ok(token, '_') => NameClass::ToolName,
        _ => NameClass::Invalid,
    }
}

pub fn is_skill_name(token: &str) -> bool {
    classify_name(token) == NameClass::SkillName
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub document: String,
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibraryReport {
    pub counts: BTreeMap<Tier, usize>,
    /// Sorted and free of duplicates.
    pub violations: Vec<Violation>,
}

impl LibraryReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// `TIER COUNT` lines, then `VIOLATION doc rule detail` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for tier in [Tier::L1, Tier::L2, Tier::L3] {
            out.push_str(&format!(
                "{tier} {}\n",
                self.counts.get(&tier).copied().unwrap_or(0)
            ));
        }
        for v in &self.violations {
            out.push_str(&format!(
                "VIOLATION {} {} {}\n",
                v.document, v.rule, v.detail
            ));
        }
        out
    }
}

/// Checks library-wide rules. The result does not depend on input order.
pub fn validate_library(docs: &[SkillDocument]) -> LibraryReport {
    let mut counts = BTreeMap::new();
    let mut found = BTreeSet::new();
    let mut names: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        *counts.entry(d.tier).or_insert(0) += 1;
        *names.entry(d.name.as_str()).or_insert(0) += 1;
    }
    let mut push = |document: &str, rule: &str, detail: String| {
        found.insert(Violation {
            document: document.to_string(),
            rule: rule.to_string(),
            detail,
        });
    };

    for (name, n) in &names {
        if *n > 1 {
            push(
                name,
                "duplicate_name",
                format!("{n} documents share this name"),
            );
        }
    }
    let l3: BTreeSet<&str> = docs
        .iter()
        .filter(|d| d.tier == Tier::L3)
        .map(|d| d.name.as_str())
        .collect();
    let l3_count = counts.get(&Tier::L3).copied().unwrap_or(0);
    if l3_count > 1 {
        let all: Vec<&str> = l3.iter().copied().collect();
        push(
            "library",
            "l3_singleton",
            format!("L3 must be singleton, found {}", all.join(",")),
        );
    }
    if l3_count == 0 && !docs.is_empty() {
        push("library", "l3_missing", "no L3 document".to_string());
    }

    for d in docs {
        if !is_skill_name(&d.name) {
            push(
                &d.name,
                "name_grammar",
                format!("{:?} is not kebab-case", d.name),
            );
        }
        if d.tier == Tier::L3 && !d.consumed_tools.is_empty() {
            push(&d.name, "tier_fields", "L3 declares tools".to_string());
        }
        if d.tier == Tier::L1 && !d.referenced_principles.is_empty() {
            push(&d.name, "tier_fields", "L1 declares principles".to_string());
        }
        for t in &d.consumed_tools {
            if classify_name(t) != NameClass::ToolName {
                push(
                    &d.name,
                    "tool_name_grammar",
                    format!("{t} is not a snake_case tool name"),
                );
            }
        }
        for p in &d.referenced_principles {
            if !(1..=25).contains(p) {
                push(
                    &d.name,
                    "principle_range",
                    format!("principle {p} out of range 1..=25"),
                );
            }
        }
        for h in &d.handoff_contract {
            for c in &h.consumers {
                if !names.contains_key(c.as_str()) {
                    push(
                        &d.name,
                        "unknown_consumer",
                        format!("{} hands off to unknown skill {c}", h.artifact_name),
                    );
                }
            }
        }
    }
    LibraryReport {
        counts,
        violations: found.into_iter().collect(),
    }
}

/// L3 first, then the workflow, then the L1 documents wrapping its tools
/// in declaration order. Tools with no wrapping L1 document are skipped.
pub fn resolve_reading_order<'a>(
    docs: &'a [SkillDocument],
    workflow: &str,
) -> Result<Vec<&'a SkillDocument>, SkillError> {
    let l3 = docs
        .iter()
        .find(|d| d.tier == Tier::L3)
        .ok_or(SkillError::MissingL3)?;
    let wf = docs
        .iter()
        .find(|d| d.tier == Tier::L2 && d.name == workflow)
        .ok_or_else(|| SkillError::UnknownWorkflow(workflow.to_string()))?;
    let mut order = vec![l3, wf];
    for tool in &wf.consumed_tools {
        let backing = docs
            .iter()
            .find(|d| d.tier == Tier::L1 && d.consumed_tools.iter().any(|t| t == tool));
        if let Some(doc) = backing {
            if !order.iter().any(|o| std::ptr::eq(*o, doc)) {
                order.push(doc);
            }
        }
    }
    Ok(order)
}

/// Loads every `*.md` file below `dir`, sorted by path.
pub fn load_dir(dir: &Path) -> Result<Vec<SkillDocument>, SkillError> {
    let mut paths = Vec::new();
    collect(dir, &mut paths)?;
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| SkillError::Io {
                path: p.display().to_string(),
                detail: e.to_string(),
            })?;
            parse_skill_document(&text).map_err(|e| SkillError::File {
                path: p.display().to_string(),
                source: Box::new(e),
            })
        })
        .collect()
}

fn collect(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<(), SkillError> {
    let io = |e: std::io::Error| SkillError::Io {
        path: dir.display().to_string(),
        detail: e.to_string(),
    };
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            collect(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "md") {
            out.push(path);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(name: &str, tier: Tier, tools: &[&str], principles: &[u32]) -> SkillDocument {
        SkillDocument {
            name: name.into(),
            tier,
            metadata: BTreeMap::new(),
            body: String::new(),
            referenced_principles: principles.to_vec(),
            consumed_tools: tools.iter().map(|s| s.to_string()).collect(),
            handoff_contract: Vec::new(),
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_name("quickvina-docking"), NameClass::SkillName);
        assert_eq!(
            classify_name("molecule_docking_quickvina_fullprocess"),
            NameClass::ToolName
        );
        assert_eq!(classify_name("dock_run-tool"), NameClass::Invalid);
        assert_eq!(classify_name(""), NameClass::Invalid);
        assert_eq!(classify_name("Run Docking!"), NameClass::Invalid);
        assert_eq!(classify_name("a--b"), NameClass::Invalid);
        assert_eq!(classify_name("docking"), NameClass::ToolName);
        assert_eq!(classify_name("9lives"), NameClass::Invalid);
    }

    #[test]
    fn library_rules() {
        let docs = vec![
            doc("core-principles", Tier::L3, &[], &[]),
            doc("other-principles", Tier::L3, &[], &[]),
            doc("dock-flow", Tier::L2, &["Bad-Tool", "good_tool"], &[3, 26]),
        ];
        let r = validate_library(&docs);
        let rules: Vec<&str> = r.violations.iter().map(|v| v.rule.as_str()).collect();
        assert_eq!(
            rules,
            vec!["principle_range", "tool_name_grammar", "l3_singleton"]
        );
        assert!(r.violations[2].detail.starts_with("L3 must be singleton"));
    }

    #[test]
    fn reading_order() {
        let docs = vec![
            doc("wrap-b", Tier::L1, &["b_tool"], &[]),
            doc("flow", Tier::L2, &["a_tool", "b_tool", "c_tool"], &[1]),
            doc("wrap-a", Tier::L1, &["a_tool"], &[]),
            doc("rules", Tier::L3, &[], &[]),
        ];
        let order: Vec<&str> = resolve_reading_order(&docs, "flow")
            .unwrap()
            .iter()
            .map(|d| d.name.as_str())
            .collect();
        assert_eq!(order, vec!["rules", "flow", "wrap-a", "wrap-b"]);
        assert_eq!(
            resolve_reading_order(&docs, "nope"),
            Err(SkillError::UnknownWorkflow("nope".into()))
        );
        assert_eq!(
            resolve_reading_order(&docs[..3], "flow"),
            Err(SkillError::MissingL3)
        );
    }
}
