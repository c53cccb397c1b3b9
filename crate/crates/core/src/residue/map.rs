//! Mapping tables between numbering schemes.

use super::align::{needleman_wunsch, AlignmentParams, Column};
use super::pdb::{dbref_records, extract_residues, three_letter, Residue};
use super::query::{ResidueQuery, SchemeTag};
use super::{NumberingScheme, ResNum, ResidueError, SchemeKind};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Arithmetic(i64),
    Dbref(i64),
    Alignment,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Arithmetic(o) => write!(f, "arith:{o:+}"),
            Strategy::Dbref(o) => write!(f, "dbref:{o:+}"),
            Strategy::Alignment => f.write_str("align"),
        }
    }
}

impl FromStr for Strategy {
    type Err = ResidueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ResidueError::Malformed(format!("strategy {s:?}"));
        if s == "align" {
            return Ok(Strategy::Alignment);
        }
        let (name, offset) = s.split_once(':').ok_or_else(bad)?;
        let offset: i64 = offset.trim_start_matches('+').parse().map_err(|_| bad())?;
        match name {
            "arith" => Ok(Strategy::Arithmetic(offset)),
            "dbref" => Ok(Strategy::Dbref(offset)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingEntry {
    pub from_number: ResNum,
    pub to_number: ResNum,
    /// Upper-case three-letter code, `UNK` when the input carried none.
    pub residue_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnmappedResidue {
    pub from_number: ResNum,
    pub residue_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    pub scheme_from: NumberingScheme,
    pub scheme_to: NumberingScheme,
    pub strategy: Strategy,
    /// Strictly increasing in `from_number`.
    pub entries: Vec<MappingEntry>,
    pub unmapped: Vec<UnmappedResidue>,
}

impl MappingTable {
    /// The same correspondence read in the opposite direction. Unmapped
    /// residues have no counterpart and are dropped.
    pub fn reversed(&self) -> MappingTable {
        let mut entries: Vec<MappingEntry> = self
            .entries
            .iter()
            .map(|e| MappingEntry {
                from_number: e.to_number,
                to_number: e.from_number,
                residue_code: e.residue_code.clone(),
            })
            .collect();
        entries.sort_by_key(|e| e.from_number);
        let strategy = match self.strategy {
            Strategy::Arithmetic(o) => Strategy::Arithmetic(-o),
            Strategy::Dbref(o) => Strategy::Dbref(-o),
            Strategy::Alignment => Strategy::Alignment,
        };
        MappingTable {
            scheme_from: self.scheme_to,
            scheme_to: self.scheme_from,
            strategy,
            entries,
            unmapped: Vec::new(),
        }
    }

    pub fn forward(&self, from: ResNum) -> Option<&MappingEntry> {
        self.entries
            .binary_search_by_key(&from, |e| e.from_number)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn reverse(&self, to: ResNum) -> Option<&MappingEntry> {
        self.entries.iter().find(|e| e.to_number == to)
    }
}

/// A one-letter sequence with the number of each position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberedSequence {
    pub residues: Vec<u8>,
    pub numbers: Vec<ResNum>,
}

impl NumberedSequence {
    pub fn new(residues: &str, numbers: Vec<ResNum>) -> Result<Self, ResidueError> {
        if residues.len() != numbers.len() {
            return Err(ResidueError::Malformed(format!(
                "{} residues but {} numbers",
                residues.len(),
                numbers.len()
            )));
        }
        if numbers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ResidueError::Malformed(
                "residue numbers must increase".into(),
            ));
        }
        Ok(NumberedSequence {
            residues: residues.as_bytes().to_vec(),
            numbers,
        })
    }

    /// Sequence numbered consecutively from `start`.
    pub fn consecutive(residues: &str, start: i64) -> Self {
        let numbers = (0..residues.len() as i64)
            .map(|i| ResNum::plain(start + i))
            .collect();
        NumberedSequence {
            residues: residues.as_bytes().to_vec(),
            numbers,
        }
    }
}

#[derive(Debug, Clone)]
pub enum MappingInput<'a> {
    Arithmetic {
        offset: i64,
        residues: Vec<Residue>,
        scheme_from: NumberingScheme,
        scheme_to: NumberingScheme,
    },
    /// Author numbering of `chain` against its database reference.
    Dbref { pdb_text: &'a str, chain: char },
    Alignment {
        from: NumberedSequence,
        to: NumberedSequence,
        params: AlignmentParams,
        scheme_from: NumberingScheme,
        scheme_to: NumberingScheme,
    },
}

/// Placeholder residues for a bare numeric range.
pub fn residue_range(chain: char, first: i64, last: i64) -> Vec<Residue> {
    (first..=last)
        .map(|n| Residue {
            chain,
            number: ResNum::plain(n),
            name: "UNK".into(),
        })
        .collect()
}

fn offset_entries(residues: &[Residue], offset: i64) -> Vec<MappingEntry> {
    let mut entries: Vec<MappingEntry> = residues
        .iter()
        .filter(|r| r.number.icode.is_none())
        .map(|r| MappingEntry {
            from_number: r.number,
            to_number: ResNum::plain(r.number.number + offset),
            residue_code: r.name.clone(),
        })
        .collect();
    entries.sort_by_key(|e| e.from_number);
    entries.dedup_by_key(|e| e.from_number);
    entries
}

pub fn build_mapping(input: &MappingInput<'_>) -> Result<MappingTable, ResidueError> {
    match input {
        MappingInput::Arithmetic {
            offset,
            residues,
            scheme_from,
            scheme_to,
        } => Ok(MappingTable {
            scheme_from: *scheme_from,
            scheme_to: *scheme_to,
            strategy: Strategy::Arithmetic(*offset),
            entries: offset_entries(residues, *offset),
            unmapped: Vec::new(),
        }),
        MappingInput::Dbref { pdb_text, chain } => {
            let record = dbref_records(pdb_text, *chain)?
                .into_iter()
                .next()
                .ok_or(ResidueError::NoDbrefRecord(*chain))?;
            let residues = match extract_residues(pdb_text, *chain) {
                Ok(rs) => rs
                    .into_iter()
                    .filter(|r| (record.seq_begin..=record.seq_end).contains(&r.number.number))
                    .collect(),
                Err(ResidueError::ChainNotFound(_)) => {
                    residue_range(*chain, record.seq_begin, record.seq_end)
                }
                Err(e) => return Err(e),
            };
            let offset = record.offset();
            Ok(MappingTable {
                scheme_from: NumberingScheme::pdb(*chain),
                scheme_to: NumberingScheme::uniprot(),
                strategy: Strategy::Dbref(offset),
                entries: offset_entries(&residues, offset),
                unmapped: Vec::new(),
            })
        }
        MappingInput::Alignment {
            from,
            to,
            params,
            scheme_from,
            scheme_to,
        } => {
            let al = needleman_wunsch(&from.residues, &to.residues, params)?;
            let mut entries = Vec::new();
            let mut unmapped = Vec::new();
            for c in &al.columns {
                match *c {
                    Column::Pair(i, j) => entries.push(MappingEntry {
                        from_number: from.numbers[i],
                        to_number: to.numbers[j],
                        residue_code: three_letter(from.residues[i] as char).to_string(),
                    }),
                    Column::GapInSecond(i) => unmapped.push(UnmappedResidue {
                        from_number: from.numbers[i],
                        residue_code: three_letter(from.residues[i] as char).to_string(),
                    }),
                    Column::GapInFirst(_) => {}
                }
            }
            Ok(MappingTable {
                scheme_from: *scheme_from,
                scheme_to: *scheme_to,
                strategy: Strategy::Alignment,
                entries,
                unmapped,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupResult {
    pub scheme: NumberingScheme,
    pub number: ResNum,
    pub residue_code: String,
}

fn query_kind(query: &ResidueQuery, reference: NumberingScheme) -> SchemeKind {
    match query.tag {
        SchemeTag::Bare => reference.kind,
        SchemeTag::Pdb => SchemeKind::PdbAuthor,
        SchemeTag::Tool => SchemeKind::ToolSequential,
    }
}

/// Translates one query through `table`.
pub fn lookup(
    table: &MappingTable,
    query: &ResidueQuery,
    direction: Direction,
    reference_scheme: NumberingScheme,
) -> Result<LookupResult, ResidueError> {
    let kind = query_kind(query, reference_scheme);
    let (side, target) = match direction {
        Direction::Forward => (table.scheme_from, table.scheme_to),
        Direction::Reverse => (table.scheme_to, table.scheme_from),
    };
    if side.kind != kind {
        return Err(ResidueError::SchemeMismatch {
            query: format!("{query}"),
            table: side.to_string(),
        });
    }
    let entry = match direction {
        Direction::Forward => table.forward(query.number),
        Direction::Reverse => table.reverse(query.number),
    }
    .ok_or_else(|| ResidueError::OutOfRange(query.to_string()))?;
    if let Some(name) = &query.residue_name {
        if entry.residue_code != "UNK" && !entry.residue_code.eq_ignore_ascii_case(name) {
            return Err(ResidueError::NameMismatch {
                number: query.number.to_string(),
                expected: name.clone(),
                actual: entry.residue_code.clone(),
            });
        }
    }
    let number = match direction {
        Direction::Forward => entry.to_number,
        Direction::Reverse => entry.from_number,
    };
    Ok(LookupResult {
        scheme: target,
        number,
        residue_code: entry.residue_code.clone(),
    })
}

pub const CSV_HEADER: &str = "from_scheme,to_scheme,strategy,from_number,to_number,residue_code";

/// Mapping table as CSV; unmapped residues get an empty `to_number`.
pub fn emit_csv(table: &MappingTable) -> String {
    let mut rows: Vec<(ResNum, String)> = Vec::new();
    let prefix = format!(
        "{},{},{}",
        table.scheme_from, table.scheme_to, table.strategy
    );
    for e in &table.entries {
        rows.push((
            e.from_number,
            format!(
                "{prefix},{},{},{}",
                e.from_number, e.to_number, e.residue_code
            ),
        ));
    }
    for u in &table.unmapped {
        rows.push((
            u.from_number,
            format!("{prefix},{},,{}", u.from_number, u.residue_code),
        ));
    }
    rows.sort_by_key(|(n, _)| *n);
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (_, row) in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Reads back a table written by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<MappingTable, ResidueError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(ResidueError::Malformed("missing mapping header".into()));
    }
    let mut meta: Option<(NumberingScheme, NumberingScheme, Strategy)> = None;
    let mut entries = Vec::new();
    let mut unmapped = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(ResidueError::Malformed(format!("row {line:?}")));
        }
        let row_meta = (cells[0].parse()?, cells[1].parse()?, cells[2].parse()?);
        match meta {
            None => meta = Some(row_meta),
            Some(m) if m != row_meta => {
                return Err(ResidueError::Malformed("rows disagree on schemes".into()))
            }
            _ => {}
        }
        let from_number: ResNum = cells[3].parse()?;
        let code = cells[5].to_string();
        if cells[4].is_empty() {
            unmapped.push(UnmappedResidue {
                from_number,
                residue_code: code,
            });
        } else {
            entries.push(MappingEntry {
                from_number,
                to_number: cells[4].parse()?,
                residue_code: code,
            });
        }
    }
    let (scheme_from, scheme_to, strategy) =
        meta.ok_or_else(|| ResidueError::Malformed("table has no rows".into()))?;
    Ok(MappingTable {
        scheme_from,
        scheme_to,
        strategy,
        entries,
        unmapped,
    })
}
