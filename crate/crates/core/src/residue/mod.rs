//! Residue numbering reconciliation between sequence and structure schemes.

pub mod align;
pub mod map;
pub mod pdb;
pub mod query;

pub use align::{needleman_wunsch, Alignment, AlignmentParams, Column};
pub use map::{
    build_mapping, emit_csv, lookup, parse_csv, Direction, LookupResult, MappingEntry,
    MappingInput, MappingTable, NumberedSequence, Strategy,
};
pub use pdb::{dbref_records, extract_residues, extract_sequence, DbrefRecord, Residue};
pub use query::{parse_query, ResidueQuery, SchemeTag};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResidueError {
    #[error("malformed query token {0:?}")]
    MalformedToken(String),
    #[error("no DBREF record for chain {0}")]
    NoDbrefRecord(char),
    #[error("chain {0} not found")]
    ChainNotFound(char),
    #[error("empty sequence")]
    EmptySequence,
    #[error("residue {0} is outside the mapped range")]
    OutOfRange(String),
    #[error("residue {number} is {actual}, query says {expected}")]
    NameMismatch {
        number: String,
        expected: String,
        actual: String,
    },
    #[error("query scheme {query} does not match table scheme {table}")]
    SchemeMismatch { query: String, table: String },
    #[error("invalid alignment parameters: {0}")]
    InvalidParams(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Author residue number with optional insertion code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResNum {
    pub number: i64,
    pub icode: Option<char>,
}

impl ResNum {
    pub fn plain(number: i64) -> Self {
        ResNum {
            number,
            icode: None,
        }
    }
}

impl Ord for ResNum {
    fn cmp(&self, other: &Self) -> Ordering {
        self.number
            .cmp(&other.number)
            .then(self.icode.cmp(&other.icode))
    }
}

impl PartialOrd for ResNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ResNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number)?;
        if let Some(c) = self.icode {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for ResNum {
    type Err = ResidueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ResidueError::Malformed(format!("residue number {s:?}"));
        let (digits, icode) = match s.chars().last() {
            Some(c) if c.is_ascii_alphabetic() => (&s[..s.len() - 1], Some(c.to_ascii_uppercase())),
            _ => (s, None),
        };
        let number = digits.parse().map_err(|_| bad())?;
        Ok(ResNum { number, icode })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    UniProt,
    PdbAuthor,
    ToolSequential,
    AnalysisOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NumberingScheme {
    pub kind: SchemeKind,
    pub chain: Option<char>,
}

impl NumberingScheme {
    pub fn uniprot() -> Self {
        NumberingScheme {
            kind: SchemeKind::UniProt,
            chain: None,
        }
    }

    pub fn pdb(chain: char) -> Self {
        NumberingScheme {
            kind: SchemeKind::PdbAuthor,
            chain: Some(chain),
        }
    }

    pub fn tool(chain: char) -> Self {
        NumberingScheme {
            kind: SchemeKind::ToolSequential,
            chain: Some(chain),
        }
    }

    /// Analysis outputs are numbered like the structure they were computed on.
    pub fn resolve(self, structure: NumberingScheme) -> NumberingScheme {
        match self.kind {
            SchemeKind::AnalysisOutput => structure,
            _ => self,
        }
    }
}

impl fmt::Display for NumberingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            SchemeKind::UniProt => "uniprot",
            SchemeKind::PdbAuthor => "pdb",
            SchemeKind::ToolSequential => "tool",
            SchemeKind::AnalysisOutput => "analysis",
        };
        match self.chain {
            Some(c) => write!(f, "{name}:{c}"),
            None => f.write_str(name),
        }
    }
}

impl FromStr for NumberingScheme {
    type Err = ResidueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, chain) = match s.split_once(':') {
            Some((n, c)) => {
                let mut chars = c.chars();
                match (chars.next(), chars.next()) {
                    (Some(ch), None) => (n, Some(ch)),
                    _ => return Err(ResidueError::Malformed(format!("scheme {s:?}"))),
                }
            }
            None => (s, None),
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "uniprot" => SchemeKind::UniProt,
            "pdb" => SchemeKind::PdbAuthor,
            "tool" => SchemeKind::ToolSequential,
            "analysis" => SchemeKind::AnalysisOutput,
            _ => return Err(ResidueError::Malformed(format!("scheme {s:?}"))),
        };
        Ok(NumberingScheme { kind, chain })
    }
}
