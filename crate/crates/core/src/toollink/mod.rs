//! Tool invocation protocol: client, mock server and access control.
//!
//! Messages are newline-delimited JSON records `{id, kind, payload}` with
//! `kind` one of `auth`, `call`, `list`, `fetch`. Replies echo the id.
//! Files travel base64-encoded and are verified after decoding.

pub mod access;
pub mod artifact;
pub mod canon;
pub mod client;
pub mod descriptor;
pub mod mock;
pub mod protocol;
pub mod transport;

pub use access::{admit_request, AccessState, Admission, Clock, ManualClock, SystemClock};
pub use artifact::{enforce_download_policy, Category, FileArtifact, PolicyDecision};
pub use client::Client;
pub use descriptor::{ArgKind, Registry, ToolDescriptor, DOCKING_UNIT, PROBABILITY_UNIT};
pub use mock::{FailurePlan, Fixture, MockServer};
pub use transport::{InProcess, LineTransport, Transport};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    ToolError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResponse {
    pub tool_name: String,
    pub status: ResponseStatus,
    /// Scalar outputs: numbers or text.
    #[serde(default)]
    pub values: BTreeMap<String, Value>,
    #[serde(default)]
    pub file_paths: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
}

impl ToolResponse {
    pub fn ok(tool_name: &str) -> Self {
        ToolResponse {
            tool_name: tool_name.to_string(),
            status: ResponseStatus::Ok,
            values: BTreeMap::new(),
            file_paths: Vec::new(),
            error_detail: None,
        }
    }

    pub fn tool_error(tool_name: &str, detail: &str) -> Self {
        ToolResponse {
            tool_name: tool_name.to_string(),
            status: ResponseStatus::ToolError,
            values: BTreeMap::new(),
            file_paths: Vec::new(),
            error_detail: Some(detail.to_string()),
        }
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(Value::as_f64)
    }

    /// Checks the structural invariants of a response.
    pub fn well_formed(&self) -> Result<(), String> {
        match (self.status, &self.error_detail) {
            (ResponseStatus::Ok, Some(_)) => return Err("ok response carries an error".into()),
            (ResponseStatus::ToolError, None) => return Err("tool error without detail".into()),
            _ => {}
        }
        if self.file_paths.iter().any(String::is_empty) {
            return Err("empty file path".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToolLinkError {
    #[error("unknown tool {name}{}", .nearest.as_ref().map(|n| format!(" (nearest: {n})")).unwrap_or_default())]
    UnknownTool {
        name: String,
        nearest: Option<String>,
    },
    #[error("{0} is a skill name, not a tool name")]
    NamingViolation(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("license rejected")]
    AuthRejected,
    #[error("rate limit reached")]
    Throttled,
    #[error("session is not authenticated")]
    Unauthenticated,
    #[error("remote file {0} does not exist")]
    RemoteMissing(String),
    #[error("remote file {0} decoded to zero bytes")]
    EmptyFile(String),
    #[error("could not decode {path}: {detail}")]
    DecodeError { path: String, detail: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("local io error: {0}")]
    LocalIo(String),
}

impl ToolLinkError {
    /// Short machine-readable kind, also used as the wire error code.
    pub fn code(&self) -> &'static str {
        match self {
            ToolLinkError::UnknownTool { .. } => "unknown_tool",
            ToolLinkError::NamingViolation(_) => "naming_violation",
            ToolLinkError::SchemaViolation(_) => "schema_violation",
            ToolLinkError::TransportError(_) => "transport_error",
            ToolLinkError::AuthRejected => "auth_rejected",
            ToolLinkError::Throttled => "throttled",
            ToolLinkError::Unauthenticated => "unauthenticated",
            ToolLinkError::RemoteMissing(_) => "remote_missing",
            ToolLinkError::EmptyFile(_) => "empty_file",
            ToolLinkError::DecodeError { .. } => "decode_error",
            ToolLinkError::Protocol(_) => "protocol",
            ToolLinkError::Config(_) => "config",
            ToolLinkError::LocalIo(_) => "local_io",
        }
    }
}
