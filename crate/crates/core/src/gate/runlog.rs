//! Append-only run log. One record per line: `SEQ KIND PAYLOAD`, where
//! PAYLOAD is compact JSON with sorted keys.

use serde_json::Value;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub seq: u64,
    pub kind: String,
    pub payload: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    records: Vec<LogRecord>,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record and returns its sequence number, starting at 1.
    pub fn append(&mut self, kind: &str, payload: Value) -> u64 {
        let seq = self.records.len() as u64 + 1;
        self.records.push(LogRecord {
            seq,
            kind: kind.to_string(),
            payload,
        });
        seq
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a LogRecord> + 'a {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{} {} {}", r.seq, r.kind, r.payload);
        }
        out
    }

    /// Reads a rendered log back. Sequence numbers must run 1, 2, 3, ...
    pub fn parse(text: &str) -> Result<RunLog, String> {
        let mut log = RunLog::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let mut parts = line.splitn(3, ' ');
            let (Some(seq), Some(kind), Some(payload)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(format!("line {}: expected SEQ KIND PAYLOAD", i + 1));
            };
            let seq: u64 = seq
                .parse()
                .map_err(|_| format!("line {}: bad sequence number {seq:?}", i + 1))?;
            if seq != log.records.len() as u64 + 1 {
                return Err(format!("line {}: sequence {seq} out of order", i + 1));
            }
            let payload =
                serde_json::from_str(payload).map_err(|e| format!("line {}: {e}", i + 1))?;
            log.append(kind, payload);
        }
        Ok(log)
    }
}
