//! The computation-first fallback ladder.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComputationLevel {
    Direct,
    Alternative,
    Approximate,
    Literature,
}

impl fmt::Display for ComputationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToolStatus {
    Available,
    Failed,
    Absent,
}

/// Tools that can produce one deliverable, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliverableTools {
    pub deliverable: String,
    pub primary: String,
    pub alternative: Option<String>,
    /// Tool giving an approximation.
    pub proxy: Option<String>,
}

/// Follow-up duties when a value has to come from the literature.
pub const LITERATURE_CHECKLIST: [&str; 6] = [
    "re-examine whether any tool can compute even an approximation",
    "label the value LITERATURE VALUE",
    "cite authors, year and DOI",
    "cross-check against a second independent source",
    "assess whether the published context matches this task",
    "explain why computation was impossible",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelChoice {
    pub level: ComputationLevel,
    /// Tool to run; None at the literature level.
    pub tool: Option<String>,
    /// Empty except at the literature level.
    pub checklist: Vec<&'static str>,
}

/// First level whose tool is available. Tools missing from the status
/// map count as absent.
pub fn select_computation_level(
    tools: &DeliverableTools,
    status: &BTreeMap<String, ToolStatus>,
) -> LevelChoice {
    let usable = |t: &str| status.get(t) == Some(&ToolStatus::Available);
    let ladder = [
        (ComputationLevel::Direct, Some(&tools.primary)),
        (ComputationLevel::Alternative, tools.alternative.as_ref()),
        (ComputationLevel::Approximate, tools.proxy.as_ref()),
    ];
    for (level, tool) in ladder {
        if let Some(t) = tool.filter(|t| usable(t)) {
            return LevelChoice {
                level,
                tool: Some(t.clone()),
                checklist: Vec::new(),
            };
        }
    }
    LevelChoice {
        level: ComputationLevel::Literature,
        tool: None,
        checklist: LITERATURE_CHECKLIST.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tools() -> DeliverableTools {
        DeliverableTools {
            deliverable: "binding_affinity".into(),
            primary: "mock_docking".into(),
            alternative: Some("affinity_predict".into()),
            proxy: Some("contact_count".into()),
        }
    }

    #[test]
    fn ladder() {
        let mut st = BTreeMap::from([("mock_docking".to_string(), ToolStatus::Available)]);
        assert_eq!(
            select_computation_level(&tools(), &st).level,
            ComputationLevel::Direct
        );
        st.insert("mock_docking".into(), ToolStatus::Failed);
        st.insert("affinity_predict".into(), ToolStatus::Available);
        let c = select_computation_level(&tools(), &st);
        assert_eq!(
            (c.level, c.tool.as_deref()),
            (ComputationLevel::Alternative, Some("affinity_predict"))
        );
        st.insert("affinity_predict".into(), ToolStatus::Failed);
        st.insert("contact_count".into(), ToolStatus::Absent);
        let c = select_computation_level(&tools(), &st);
        assert_eq!(c.level, ComputationLevel::Literature);
        assert_eq!(c.checklist.len(), 6);
    }
}
