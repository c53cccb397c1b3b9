//! Count gate: recount a claimed quantity from its source file.

use super::GateError;
use regex::Regex;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// How a file is counted. Stands in for a recorded verification command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CounterKind {
    /// Length of the top-level JSON array.
    JsonArrayLength,
    /// Data rows after the header.
    CsvRows,
    /// Lines matching a regular expression.
    LineMatch(String),
    /// MODEL records, or 1 for a single-model file.
    PdbModels,
}

impl fmt::Display for CounterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterKind::JsonArrayLength => f.write_str("json_array_length"),
            CounterKind::CsvRows => f.write_str("csv_rows"),
            CounterKind::LineMatch(p) => write!(f, "line_match:{p}"),
            CounterKind::PdbModels => f.write_str("pdb_models"),
        }
    }
}

impl FromStr for CounterKind {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "json_array_length" => Ok(CounterKind::JsonArrayLength),
            "csv_rows" => Ok(CounterKind::CsvRows),
            "pdb_models" => Ok(CounterKind::PdbModels),
            _ => match s.strip_prefix("line_match:") {
                Some(p) if !p.is_empty() => Ok(CounterKind::LineMatch(p.to_string())),
                _ => Err(GateError::CounterUnsupported {
                    counter: s.to_string(),
                    detail: "unknown counter".into(),
                }),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountGateRecord {
    pub claimed: u64,
    pub source_file: PathBuf,
    pub counter_kind: CounterKind,
    /// Authoritative whenever it differs from the claim.
    pub actual: u64,
    pub passed: bool,
    pub verification_note: String,
}

fn unsupported(kind: &CounterKind, detail: impl Into<String>) -> GateError {
    GateError::CounterUnsupported {
        counter: kind.to_string(),
        detail: detail.into(),
    }
}

/// Counts `text` with `kind`. Format mismatches are errors, not zeros.
pub fn count_text(text: &str, kind: &CounterKind) -> Result<u64, GateError> {
    let body = text.trim_start_matches('\u{feff}');
    let looks_json = matches!(body.trim_start().chars().next(), Some('[') | Some('{'));
    match kind {
        CounterKind::JsonArrayLength => match serde_json::from_str::<serde_json::Value>(body) {
            Ok(serde_json::Value::Array(a)) => Ok(a.len() as u64),
            Ok(_) => Err(unsupported(kind, "top-level value is not an array")),
            Err(e) => Err(unsupported(kind, format!("not JSON: {e}"))),
        },
        CounterKind::CsvRows => {
            if looks_json || is_pdb(body) {
                return Err(unsupported(kind, "file is not CSV"));
            }
            let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
            let mut n = 0;
            for row in rdr.records() {
                let row = row.map_err(|e| unsupported(kind, e.to_string()))?;
                if row.iter().any(|c| !c.trim().is_empty()) {
                    n += 1;
                }
            }
            Ok(n)
        }
        CounterKind::LineMatch(pattern) => {
            let re = Regex::new(pattern).map_err(|e| unsupported(kind, e.to_string()))?;
            Ok(body.lines().filter(|l| re.is_match(l)).count() as u64)
        }
        CounterKind::PdbModels => {
            if !is_pdb(body) {
                return Err(unsupported(kind, "file has no PDB coordinate records"));
            }
            let models = body.lines().filter(|l| record(l) == "MODEL").count() as u64;
            Ok(if models == 0 { 1 } else { models })
        }
    }
}

fn record(line: &str) -> &str {
    line.get(..6).unwrap_or(line).trim_end()
}

fn is_pdb(text: &str) -> bool {
    text.lines()
        .any(|l| matches!(record(l), "ATOM" | "HETATM" | "MODEL"))
}

/// Recounts `source_file` and compares against `claimed`.
pub fn count_gate(
    claimed: u64,
    source_file: &Path,
    kind: &CounterKind,
) -> Result<CountGateRecord, GateError> {
    let bytes =
        fs::read(source_file).map_err(|_| GateError::FileMissing(source_file.to_path_buf()))?;
    let text = String::from_utf8(bytes).map_err(|_| unsupported(kind, "file is not UTF-8 text"))?;
    let actual = count_text(&text, kind)?;
    let passed = actual == claimed;
    let name = source_file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let verification_note = format!(
        "{kind}({name}) = {actual}; claimed {claimed}{}",
        if passed {
            ""
        } else {
            "; actual value is authoritative"
        }
    );
    Ok(CountGateRecord {
        claimed,
        source_file: source_file.to_path_buf(),
        counter_kind: kind.clone(),
        actual,
        passed,
        verification_note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pdb_models(n: usize) -> String {
        let mut s = String::new();
        for i in 1..=n {
            s.push_str(&format!("MODEL     {i:>4}\nATOM      1  N   MET A 769      1.000   2.000   3.000  1.00  0.00           N\nENDMDL\n"));
        }
        s.push_str("END\n");
        s
    }

    #[test]
    fn counters() {
        assert_eq!(count_text("[1,2,3]", &CounterKind::JsonArrayLength), Ok(3));
        assert_eq!(count_text("[]", &CounterKind::JsonArrayLength), Ok(0));
        assert!(count_text("{\"a\":1}", &CounterKind::JsonArrayLength).is_err());
        assert_eq!(
            count_text("id,smiles\n1,C\n2,CC\n\n", &CounterKind::CsvRows),
            Ok(2)
        );
        assert_eq!(count_text(&pdb_models(20), &CounterKind::PdbModels), Ok(20));
        assert!(matches!(
            count_text("id,smiles\n1,C\n", &CounterKind::PdbModels),
            Err(GateError::CounterUnsupported { .. })
        ));
        assert!(count_text(&pdb_models(2), &CounterKind::CsvRows).is_err());
        let lm: CounterKind = "line_match:^ATOM".parse().unwrap();
        assert_eq!(count_text(&pdb_models(4), &lm), Ok(4));
    }

    #[test]
    fn gate_on_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ensemble.pdb");
        fs::write(&p, pdb_models(20)).unwrap();
        let ok = count_gate(20, &p, &CounterKind::PdbModels).unwrap();
        assert!(ok.passed);
        let bad = count_gate(25, &p, &CounterKind::PdbModels).unwrap();
        assert!(!bad.passed && bad.actual == 20);
        assert!(bad.verification_note.contains("pdb_models(ensemble.pdb)"));
        assert_eq!(count_gate(25, &p, &CounterKind::PdbModels).unwrap(), bad);
        assert!(matches!(
            count_gate(1, &dir.path().join("nope"), &CounterKind::CsvRows),
            Err(GateError::FileMissing(_))
        ));
    }
}
