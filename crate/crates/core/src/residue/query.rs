//! Mixed residue query syntax: `Met793, pdb:769, tool:76`.

use super::pdb::is_known_three_letter;
use super::{ResNum, ResidueError};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeTag {
    /// Named residue in the task's reference scheme.
    Bare,
    Pdb,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueQuery {
    pub tag: SchemeTag,
    /// Upper-case three-letter code, when given.
    pub residue_name: Option<String>,
    pub number: ResNum,
}

impl fmt::Display for ResidueQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self
            .residue_name
            .as_deref()
            .map(title_case)
            .unwrap_or_default();
        match self.tag {
            SchemeTag::Bare => write!(f, "{name}{}", self.number),
            SchemeTag::Pdb => write!(f, "pdb:{name}{}", self.number),
            SchemeTag::Tool => write!(f, "tool:{name}{}", self.number),
        }
    }
}

fn title_case(code: &str) -> String {
    let mut out = String::new();
    for (i, c) in code.chars().enumerate() {
        out.push(if i == 0 {
            c.to_ascii_uppercase()
        } else {
            c.to_ascii_lowercase()
        });
    }
    out
}

fn split_name(body: &str) -> (Option<&str>, &str) {
    let letters = body.chars().take_while(|c| c.is_ascii_alphabetic()).count();
    if letters == 0 {
        (None, body)
    } else {
        (Some(&body[..letters]), &body[letters..])
    }
}

fn parse_token(token: &str) -> Result<ResidueQuery, ResidueError> {
    let bad = || ResidueError::MalformedToken(token.to_string());
    let (tag, body) = match token.split_once(':') {
        Some((t, rest)) => match t.trim().to_ascii_lowercase().as_str() {
            "pdb" => (SchemeTag::Pdb, rest.trim()),
            "tool" => (SchemeTag::Tool, rest.trim()),
            _ => return Err(bad()),
        },
        None => (SchemeTag::Bare, token),
    };
    let (name, digits) = split_name(body);
    let residue_name = match name {
        Some(n) if n.len() == 3 && is_known_three_letter(n) => Some(n.to_ascii_uppercase()),
        Some(_) => return Err(bad()),
        None => None,
    };
    if tag == SchemeTag::Bare && residue_name.is_none() {
        return Err(bad());
    }
    if digits.is_empty() || !digits.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
        return Err(bad());
    }
    let number: ResNum = digits.parse().map_err(|_| bad())?;
    Ok(ResidueQuery {
        tag,
        residue_name,
        number,
    })
}

/// Parses a comma-separated query list.
pub fn parse_query(text: &str) -> Result<Vec<ResidueQuery>, ResidueError> {
    let tokens: Vec<&str> = text.split(',').map(str::trim).collect();
    if tokens.iter().all(|t| t.is_empty()) {
        return Err(ResidueError::MalformedToken(text.to_string()));
    }
    tokens.into_iter().map(parse_token).collect()
}
