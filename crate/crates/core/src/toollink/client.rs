//! Blocking protocol client with download-verify.

use super::artifact::{Category, FileArtifact};
use super::canon::sha256_hex;
use super::descriptor::{Registry, ToolDescriptor};
use super::protocol::{parse_reply, Request, RequestKind};
use super::transport::Transport;
use super::{ToolLinkError, ToolResponse};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Map, Value};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct Client<T: Transport> {
    transport: T,
    next_id: u64,
    registry: Option<Registry>,
    download_dir: PathBuf,
}

impl<T: Transport> Client<T> {
    pub fn new(transport: T, download_dir: impl Into<PathBuf>) -> Self {
        Client {
            transport,
            next_id: 1,
            registry: None,
            download_dir: download_dir.into(),
        }
    }

    pub fn download_dir(&self) -> &Path {
        &self.download_dir
    }

    /// Registry from the most recent `list_tools`.
    pub fn cached_registry(&self) -> Option<&Registry> {
        self.registry.as_ref()
    }

    fn request(&mut self, kind: RequestKind, payload: Value) -> Result<Value, ToolLinkError> {
        let id = self.next_id;
        self.next_id += 1;
        let line = Request { id, kind, payload }.to_line();
        let raw = self
            .transport
            .exchange(&line)
            .map_err(|e| ToolLinkError::TransportError(e.to_string()))?;
        let reply = parse_reply(&raw)?;
        if reply.id != id && reply.ok {
            return Err(ToolLinkError::Protocol(format!(
                "reply id {} does not match request {id}",
                reply.id
            )));
        }
        reply.into_result()
    }

    pub fn authenticate(&mut self, client_id: &str, license: &str) -> Result<(), ToolLinkError> {
        self.request(
            RequestKind::Auth,
            json!({ "client": client_id, "license": license }),
        )
        .map(|_| ())
    }

    /// Every registered descriptor, sorted by name. Caches the registry
    /// so later calls can be checked before they are sent.
    pub fn list_tools(&mut self) -> Result<Vec<ToolDescriptor>, ToolLinkError> {
        let payload = self.request(RequestKind::List, json!({}))?;
        let tools: Vec<ToolDescriptor> =
            serde_json::from_value(payload.get("tools").cloned().unwrap_or(Value::Null))
                .map_err(|e| ToolLinkError::Protocol(format!("tool list: {e}")))?;
        self.registry = Some(Registry::new(tools.clone())?);
        Ok(tools)
    }

    /// Sends one call. Name and schema errors are raised locally when the
    /// registry is known; otherwise the server reports them.
    pub fn call_tool(
        &mut self,
        name: &str,
        args: &Map<String, Value>,
    ) -> Result<ToolResponse, ToolLinkError> {
        if let Some(reg) = &self.registry {
            reg.check_call(name, args)?;
        }
        let payload = self.request(RequestKind::Call, json!({ "name": name, "args": args }))?;
        let resp: ToolResponse = serde_json::from_value(payload)
            .map_err(|e| ToolLinkError::Protocol(format!("tool response: {e}")))?;
        resp.well_formed().map_err(ToolLinkError::Protocol)?;
        Ok(resp)
    }

    fn local_path(&self, remote_path: &str) -> PathBuf {
        let mut p = self.download_dir.clone();
        for seg in remote_path
            .split('/')
            .filter(|s| !s.is_empty() && *s != "." && *s != "..")
        {
            p.push(seg);
        }
        p
    }

    /// Downloads, decodes, writes and verifies one remote file.
    pub fn fetch_file(
        &mut self,
        remote_path: &str,
        category: Category,
    ) -> Result<FileArtifact, ToolLinkError> {
        let payload = self.request(RequestKind::Fetch, json!({ "path": remote_path }))?;
        let encoded = payload
            .get("content")
            .and_then(Value::as_str)
            .ok_or_else(|| ToolLinkError::Protocol("fetch reply without content".into()))?;
        let bytes = STANDARD
            .decode(encoded)
            .map_err(|e| ToolLinkError::DecodeError {
                path: remote_path.to_string(),
                detail: e.to_string(),
            })?;
        if bytes.is_empty() {
            return Err(ToolLinkError::EmptyFile(remote_path.to_string()));
        }
        let local = self.local_path(remote_path);
        let io = |e: std::io::Error| ToolLinkError::LocalIo(format!("{}: {e}", local.display()));
        if let Some(parent) = local.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        fs::write(&local, &bytes).map_err(io)?;
        let written = fs::read(&local).map_err(io)?;
        if written.is_empty() || written != bytes {
            return Err(ToolLinkError::LocalIo(format!(
                "{}: verification failed",
                local.display()
            )));
        }
        Ok(FileArtifact {
            remote_path: remote_path.to_string(),
            category,
            fetched: true,
            local_size_bytes: written.len() as u64,
            local_path: Some(local),
            sha256: Some(sha256_hex(&written)),
        })
    }
}
