use super::{is_skill_name, HandoffEntry, SkillDocument, SkillError, Tier};
use crate::toollink::artifact::Category;
use std::collections::BTreeMap;

const DELIM: &str = "---";
const STRUCTURAL: [&str; 5] = ["name", "tier", "principles", "tools", "handoff"];

fn malformed(key: &str, detail: impl Into<String>) -> SkillError {
    SkillError::MalformedField {
        key: key.to_string(),
        detail: detail.into(),
    }
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<String>, SkillError> {
    let inner = raw.trim();
    let inner = match (inner.strip_prefix('['), inner.ends_with(']')) {
        (Some(rest), true) => &rest[..rest.len() - 1],
        (None, false) => inner,
        _ => return Err(malformed(key, "unbalanced brackets")),
    };
    Ok(inner
        .split(',')
        .map(|s| s.trim().trim_matches('"').to_string())
        .filter(|s| !s.is_empty())
        .collect())
}

fn parse_handoff(raw: &str) -> Result<Vec<HandoffEntry>, SkillError> {
    let mut out = Vec::new();
    for part in raw.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let cells: Vec<&str> = part.split('|').map(str::trim).collect();
        if cells.len() != 4 {
            return Err(malformed(
                "handoff",
                format!("expected 4 fields in {part:?}"),
            ));
        }
        let category = match cells[3] {
            "A" => Category::A,
            "B" => Category::B,
            "C" => Category::C,
            other => return Err(malformed("handoff", format!("category {other:?}"))),
        };
        if cells[0].is_empty() {
            return Err(malformed("handoff", "empty artifact name"));
        }
        out.push(HandoffEntry {
            artifact_name: cells[0].to_string(),
            file_format: cells[1].to_string(),
            consumers: cells[2]
                .split(',')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(String::from)
                .collect(),
            download_category: category,
        });
    }
    Ok(out)
}

/// Parses one skill file.
pub fn parse_skill_document(text: &str) -> Result<SkillDocument, SkillError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut rest = text;
    let first = next_line(&mut rest);
    if first.map(str::trim_end) != Some(DELIM) {
        return Err(SkillError::MissingHeader("no front-matter block".into()));
    }
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    loop {
        let line = next_line(&mut rest)
            .ok_or_else(|| SkillError::MissingHeader("front-matter block is not closed".into()))?;
        let trimmed = line.trim();
        if line.trim_end() == DELIM {
            break;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once(':')
            .ok_or_else(|| malformed(trimmed, "expected key: value"))?;
        let key = key.trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        {
            return Err(malformed(key, "keys are lowercase identifiers"));
        }
        if header
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(malformed(key, "duplicate key"));
        }
    }
    let body = rest.to_string();

    let name = header
        .remove("name")
        .ok_or_else(|| SkillError::MissingHeader("name".into()))?;
    if !is_skill_name(&name) {
        return Err(SkillError::MalformedName(name));
    }
    let tier: Tier = header
        .remove("tier")
        .ok_or_else(|| SkillError::MissingHeader("tier".into()))?
        .parse()?;

    let principles = match header.remove("principles") {
        Some(raw) => parse_list("principles", &raw)?
            .iter()
            .map(|p| {
                p.parse::<u32>()
                    .map_err(|_| malformed("principles", format!("{p:?} is not an integer")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let tools = match header.remove("tools") {
        Some(raw) => parse_list("tools", &raw)?,
        None => Vec::new(),
    };
    let handoff = match header.remove("handoff") {
        Some(raw) => parse_handoff(&raw)?,
        None => Vec::new(),
    };

    let conflict = |key: &str| {
        Err(SkillError::TierConflict {
            tier,
            key: key.to_string(),
        })
    };
    match tier {
        Tier::L1 if !principles.is_empty() => return conflict("principles"),
        Tier::L3 if !tools.is_empty() => return conflict("tools"),
        Tier::L1 | Tier::L3 if !handoff.is_empty() => return conflict("handoff"),
        _ => {}
    }

    Ok(SkillDocument {
        name,
        tier,
        metadata: header,
        body,
        referenced_principles: principles,
        consumed_tools: tools,
        handoff_contract: handoff,
    })
}

fn next_line<'a>(rest: &mut &'a str) -> Option<&'a str> {
    if rest.is_empty() {
        return None;
    }
    match rest.find('\n') {
        Some(i) => {
            let line = &rest[..i];
            *rest = &rest[i + 1..];
            Some(line.strip_suffix('\r').unwrap_or(line))
        }
        None => {
            let line = *rest;
            *rest = "";
            Some(line)
        }
    }
}

/// Canonical text form; parsing it yields the same document.
pub fn serialize_skill_document(doc: &SkillDocument) -> String {
    let mut out = format!("{DELIM}\nname: {}\ntier: {}\n", doc.name, doc.tier);
    for (k, v) in &doc.metadata {
        if !STRUCTURAL.contains(&k.as_str()) {
            out.push_str(&format!("{k}: {v}\n"));
        }
    }
    if !doc.referenced_principles.is_empty() {
        let ps: Vec<String> = doc
            .referenced_principles
            .iter()
            .map(u32::to_string)
            .collect();
        out.push_str(&format!("principles: [{}]\n", ps.join(", ")));
    }
    if !doc.consumed_tools.is_empty() {
        out.push_str(&format!("tools: [{}]\n", doc.consumed_tools.join(", ")));
    }
    if !doc.handoff_contract.is_empty() {
        let entries: Vec<String> = doc
            .handoff_contract
            .iter()
            .map(|h| {
                format!(
                    "{}|{}|{}|{:?}",
                    h.artifact_name,
                    h.file_format,
                    h.consumers.join(","),
                    h.download_category
                )
            })
            .collect();
        out.push_str(&format!("handoff: {}\n", entries.join("; ")));
    }
    out.push_str(DELIM);
    out.push('\n');
    out.push_str(&doc.body);
    out
}
