//! Returned files, their download categories and the download policy.

use super::ToolResponse;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// A: must download, B: should download, C: may skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
}

impl Category {
    pub fn blocks(self) -> bool {
        matches!(self, Category::A | Category::B)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Category::A),
            "B" | "b" => Ok(Category::B),
            "C" | "c" => Ok(Category::C),
            other => Err(format!("unknown download category {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileArtifact {
    pub remote_path: String,
    pub category: Category,
    pub fetched: bool,
    /// Nonzero whenever `fetched` is set.
    pub local_size_bytes: u64,
    pub local_path: Option<PathBuf>,
    /// Hex SHA-256 of the received bytes.
    pub sha256: Option<String>,
}

impl FileArtifact {
    pub fn pending(remote_path: &str, category: Category) -> Self {
        FileArtifact {
            remote_path: remote_path.to_string(),
            category,
            fetched: false,
            local_size_bytes: 0,
            local_path: None,
            sha256: None,
        }
    }

    /// Last path segment.
    pub fn file_name(&self) -> &str {
        self.remote_path
            .rsplit('/')
            .next()
            .unwrap_or(&self.remote_path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyDecision {
    Proceed,
    Blocked(Vec<String>),
}

/// Blocks on every category A or B path of `response` not yet fetched.
/// A path without a matching artifact is treated as unfetched category A.
pub fn enforce_download_policy(
    response: &ToolResponse,
    artifacts: &[FileArtifact],
) -> PolicyDecision {
    let mut blocked = Vec::new();
    for path in &response.file_paths {
        let art = artifacts.iter().find(|a| &a.remote_path == path);
        let pending = match art {
            Some(a) => a.category.blocks() && !(a.fetched && a.local_size_bytes > 0),
            None => true,
        };
        if pending {
            blocked.push(path.clone());
        }
    }
    if blocked.is_empty() {
        PolicyDecision::Proceed
    } else {
        PolicyDecision::Blocked(blocked)
    }
}
