//! Minimal PDB reading: ATOM residues and DBREF records.

use super::{ResNum, ResidueError};

const CODES: [(&str, char); 20] = [
    ("ALA", 'A'),
    ("ARG", 'R'),
    ("ASN", 'N'),
    ("ASP", 'D'),
    ("CYS", 'C'),
    ("GLN", 'Q'),
    ("GLU", 'E'),
    ("GLY", 'G'),
    ("HIS", 'H'),
    ("ILE", 'I'),
    ("LEU", 'L'),
    ("LYS", 'K'),
    ("MET", 'M'),
    ("PHE", 'F'),
    ("PRO", 'P'),
    ("SER", 'S'),
    ("THR", 'T'),
    ("TRP", 'W'),
    ("TYR", 'Y'),
    ("VAL", 'V'),
];

/// One-letter code for a three-letter residue name; `X` when unknown.
pub fn one_letter(three: &str) -> char {
    let up = three.trim().to_ascii_uppercase();
    CODES
        .iter()
        .find(|(t, _)| *t == up)
        .map(|(_, c)| *c)
        .unwrap_or('X')
}

/// Three-letter code for a one-letter code; `UNK` when unknown.
pub fn three_letter(one: char) -> &'static str {
    let up = one.to_ascii_uppercase();
    CODES
        .iter()
        .find(|(_, c)| *c == up)
        .map(|(t, _)| *t)
        .unwrap_or("UNK")
}

pub fn is_known_three_letter(three: &str) -> bool {
    let up = three.to_ascii_uppercase();
    CODES.iter().any(|(t, _)| *t == up)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residue {
    pub chain: char,
    pub number: ResNum,
    /// Upper-case three-letter name as written in the file.
    pub name: String,
}

impl Residue {
    pub fn one_letter(&self) -> char {
        one_letter(&self.name)
    }
}

fn col(line: &str, from: usize, to: usize) -> &str {
    let end = to.min(line.len());
    if from >= end {
        return "";
    }
    line.get(from..end).unwrap_or("")
}

/// Residues of `chain` in order of first appearance in the first model.
///
/// Alternate locations of one residue collapse to a single entry.
pub fn extract_residues(pdb_text: &str, chain: char) -> Result<Vec<Residue>, ResidueError> {
    let mut out: Vec<Residue> = Vec::new();
    for line in pdb_text.lines() {
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM  ") || line.len() < 27 {
            continue;
        }
        if col(line, 21, 22).chars().next() != Some(chain) {
            continue;
        }
        let number: i64 = col(line, 22, 26)
            .trim()
            .parse()
            .map_err(|_| ResidueError::Malformed(format!("bad residue number in: {line}")))?;
        let icode = col(line, 26, 27).chars().next().filter(|c| *c != ' ');
        let num = ResNum { number, icode };
        if out.iter().any(|r| r.number == num) {
            continue;
        }
        out.push(Residue {
            chain,
            number: num,
            name: col(line, 17, 20).trim().to_ascii_uppercase(),
        });
    }
    if out.is_empty() {
        return Err(ResidueError::ChainNotFound(chain));
    }
    Ok(out)
}

/// One-letter sequence and author numbers of `chain`.
pub fn extract_sequence(
    pdb_text: &str,
    chain: char,
) -> Result<(String, Vec<ResNum>), ResidueError> {
    let residues = extract_residues(pdb_text, chain)?;
    let seq = residues.iter().map(Residue::one_letter).collect();
    Ok((seq, residues.into_iter().map(|r| r.number).collect()))
}

/// A DBREF record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbrefRecord {
    pub id_code: String,
    pub chain: char,
    pub seq_begin: i64,
    pub seq_end: i64,
    pub database: String,
    pub accession: String,
    pub db_id_code: String,
    pub db_seq_begin: i64,
    pub db_seq_end: i64,
}

impl DbrefRecord {
    /// Database numbering minus author numbering.
    pub fn offset(&self) -> i64 {
        self.db_seq_begin - self.seq_begin
    }

    /// Renders the record in fixed columns.
    pub fn to_line(&self) -> String {
        format!(
            "DBREF  {:<4} {} {:>4}  {:>4}  {:<6} {:<8} {:<12} {:>5}  {:>5}",
            self.id_code,
            self.chain,
            self.seq_begin,
            self.seq_end,
            self.database,
            self.accession,
            self.db_id_code,
            self.db_seq_begin,
            self.db_seq_end
        )
    }
}

fn parse_dbref(line: &str) -> Result<DbrefRecord, ResidueError> {
    let int = |from, to, what: &str| -> Result<i64, ResidueError> {
        col(line, from, to)
            .trim()
            .parse()
            .map_err(|_| ResidueError::Malformed(format!("DBREF {what} in: {line}")))
    };
    Ok(DbrefRecord {
        id_code: col(line, 7, 11).trim().to_string(),
        chain: col(line, 12, 13).chars().next().unwrap_or(' '),
        seq_begin: int(14, 18, "seqBegin")?,
        seq_end: int(20, 24, "seqEnd")?,
        database: col(line, 26, 32).trim().to_string(),
        accession: col(line, 33, 41).trim().to_string(),
        db_id_code: col(line, 42, 54).trim().to_string(),
        db_seq_begin: int(55, 60, "dbSeqBegin")?,
        db_seq_end: int(62, 67, "dbSeqEnd")?,
    })
}

/// All DBREF records for `chain`, in file order.
pub fn dbref_records(pdb_text: &str, chain: char) -> Result<Vec<DbrefRecord>, ResidueError> {
    let mut out = Vec::new();
    for line in pdb_text.lines().filter(|l| l.starts_with("DBREF ")) {
        let rec = parse_dbref(line)?;
        if rec.chain == chain {
            out.push(rec);
        }
    }
    Ok(out)
}
