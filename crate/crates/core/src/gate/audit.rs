//! Provenance labels for reported values.

use super::GateError;
use std::fmt;

/// Prepended to every literature-derived value.
pub const LITERATURE_LABEL: &str = "LITERATURE VALUE --- not computed in this session";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimCategory {
    ToolComputed,
    AgentInterpretation,
    LiteratureValue,
}

impl ClaimCategory {
    /// 1, 2 or 3.
    pub fn number(self) -> u8 {
        match self {
            ClaimCategory::ToolComputed => 1,
            ClaimCategory::AgentInterpretation => 2,
            ClaimCategory::LiteratureValue => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClaimValue {
    Number(f64),
    Text(String),
}

impl ClaimValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            ClaimValue::Number(x) => Some(*x),
            ClaimValue::Text(_) => None,
        }
    }
}

impl fmt::Display for ClaimValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClaimValue::Number(x) => write!(f, "{x}"),
            ClaimValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Citation {
    pub authors: String,
    pub year: String,
    pub doi: String,
}

impl Citation {
    /// Parses `authors=...;year=...;doi=...`.
    pub fn parse(text: &str) -> Citation {
        let mut c = Citation {
            authors: String::new(),
            year: String::new(),
            doi: String::new(),
        };
        for part in text.split(';') {
            if let Some((k, v)) = part.split_once('=') {
                let v = v.trim().to_string();
                match k.trim() {
                    "authors" => c.authors = v,
                    "year" => c.year = v,
                    "doi" => c.doi = v,
                    _ => {}
                }
            }
        }
        c
    }

    fn missing(&self) -> Vec<&'static str> {
        let mut m = Vec::new();
        if self.authors.trim().is_empty() {
            m.push("authors");
        }
        if self.year.trim().is_empty() {
            m.push("year");
        }
        if self.doi.trim().is_empty() {
            m.push("doi");
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClaimSource {
    Tool { tool_name: String, response_id: u64 },
    Rationale(String),
    Citation(Citation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub claim_id: String,
    pub value: ClaimValue,
    pub category: ClaimCategory,
    pub source: ClaimSource,
    /// The literature warning, for category 3 only.
    pub label: Option<String>,
}

impl AuditEntry {
    pub fn render(&self) -> String {
        let source = match &self.source {
            ClaimSource::Tool {
                tool_name,
                response_id,
            } => format!("{tool_name}, response {response_id}"),
            ClaimSource::Rationale(r) => format!("rationale: {r}"),
            ClaimSource::Citation(c) => format!("{}, {}, doi:{}", c.authors, c.year, c.doi),
        };
        let label = self
            .label
            .as_ref()
            .map(|l| format!("[{l}] "))
            .unwrap_or_default();
        format!(
            "{label}{} = {} (category {}; {source})",
            self.claim_id,
            self.value,
            self.category.number()
        )
    }
}

/// Builds an audit entry, enforcing the source each category needs.
pub fn label_claim(
    claim_id: &str,
    value: ClaimValue,
    category: ClaimCategory,
    source: ClaimSource,
) -> Result<AuditEntry, GateError> {
    let missing = |what: &str| GateError::MissingSource(format!("{claim_id}: {what}"));
    let label = match (category, &source) {
        (ClaimCategory::ToolComputed, ClaimSource::Tool { tool_name, .. })
            if !tool_name.trim().is_empty() =>
        {
            None
        }
        (ClaimCategory::ToolComputed, _) => {
            return Err(missing("tool-computed values need a tool response"))
        }
        (ClaimCategory::AgentInterpretation, ClaimSource::Rationale(r)) if !r.trim().is_empty() => {
            None
        }
        (ClaimCategory::AgentInterpretation, _) => {
            return Err(missing("interpretations need a rationale"))
        }
        (ClaimCategory::LiteratureValue, ClaimSource::Citation(c)) => {
            let m = c.missing();
            if !m.is_empty() {
                return Err(GateError::IncompleteCitation(format!(
                    "{claim_id}: missing {}",
                    m.join(", ")
                )));
            }
            Some(LITERATURE_LABEL.to_string())
        }
        (ClaimCategory::LiteratureValue, _) => {
            return Err(GateError::IncompleteCitation(format!(
                "{claim_id}: no citation"
            )))
        }
    };
    Ok(AuditEntry {
        claim_id: claim_id.to_string(),
        value,
        category,
        source,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories() {
        let e = label_claim(
            "score",
            ClaimValue::Number(-8.3),
            ClaimCategory::ToolComputed,
            ClaimSource::Tool {
                tool_name: "mock_docking".into(),
                response_id: 2,
            },
        )
        .unwrap();
        assert_eq!(e.category.number(), 1);
        assert!(e.label.is_none());

        let no_doi = Citation::parse("authors=Smith J;year=2010");
        assert!(matches!(
            label_claim(
                "ki",
                ClaimValue::Number(2.0),
                ClaimCategory::LiteratureValue,
                ClaimSource::Citation(no_doi)
            ),
            Err(GateError::IncompleteCitation(_))
        ));
        let full = Citation::parse("authors=Smith J; year=2010; doi=10.1000/xyz");
        let lit = label_claim(
            "ki",
            ClaimValue::Number(2.0),
            ClaimCategory::LiteratureValue,
            ClaimSource::Citation(full),
        )
        .unwrap();
        assert_eq!(lit.label.as_deref(), Some(LITERATURE_LABEL));
        assert!(lit.render().starts_with("[LITERATURE VALUE"));

        let interp = label_claim(
            "binding",
            ClaimValue::Text("suggests moderate binding potential".into()),
            ClaimCategory::AgentInterpretation,
            ClaimSource::Rationale("score between -7 and -9".into()),
        )
        .unwrap();
        assert_eq!(interp.category.number(), 2);
        assert!(matches!(
            label_claim(
                "x",
                ClaimValue::Number(1.0),
                ClaimCategory::AgentInterpretation,
                ClaimSource::Rationale(" ".into())
            ),
            Err(GateError::MissingSource(_))
        ));
    }
}
