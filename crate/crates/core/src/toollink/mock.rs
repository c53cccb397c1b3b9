//! Deterministic stand-in for the remote tool service.
//!
//! Numeric outputs come from a seeded digest of the tool name and the
//! canonical arguments, scaled into the range declared by the descriptor.
//! Fixture rows override single keys; a failure plan injects tool errors
//! at chosen call ordinals.

use super::access::{AccessState, Admission, Clock, SystemClock};
use super::canon::{arg_digest, canonical_args};
use super::descriptor::{Registry, ToolDescriptor};
use super::protocol::{parse_request, Reply, RequestKind};
use super::{ToolLinkError, ToolResponse};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::sync::{Mutex, RwLock};

/// Fixture key prefix that replaces the content of a returned file.
pub const FILE_KEY_PREFIX: &str = "file:";

/// One fixture row. `arg_digest` is a full hex digest or `*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub tool_name: String,
    pub arg_digest: String,
    pub key: String,
    pub value: String,
}

impl Fixture {
    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<Fixture>, ToolLinkError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut out = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| ToolLinkError::Config(format!("fixtures: {e}")))?;
            if row.len() != 4 {
                return Err(ToolLinkError::Config(format!(
                    "fixtures: expected 4 columns, got {}",
                    row.len()
                )));
            }
            out.push(Fixture {
                tool_name: row[0].to_string(),
                arg_digest: row[1].to_string(),
                key: row[2].to_string(),
                value: row[3].to_string(),
            });
        }
        Ok(out)
    }
}

/// Injected errors keyed by (tool name, 1-based call ordinal).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FailurePlan {
    schedule: BTreeMap<(String, u64), String>,
}

impl FailurePlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn inject(
        &mut self,
        tool: &str,
        ordinal: u64,
        error_text: &str,
    ) -> Result<(), ToolLinkError> {
        if ordinal == 0 {
            return Err(ToolLinkError::Config("failure ordinals start at 1".into()));
        }
        self.schedule
            .insert((tool.to_string(), ordinal), error_text.to_string());
        Ok(())
    }

    pub fn get(&self, tool: &str, ordinal: u64) -> Option<&str> {
        self.schedule
            .get(&(tool.to_string(), ordinal))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedule.is_empty()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FailurePlan, ToolLinkError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut plan = FailurePlan::new();
        for row in rdr.records() {
            let row = row.map_err(|e| ToolLinkError::Config(format!("failure plan: {e}")))?;
            if row.len() != 3 {
                return Err(ToolLinkError::Config(format!(
                    "failure plan: expected 3 columns, got {}",
                    row.len()
                )));
            }
            let ordinal: u64 = row[1].parse().map_err(|_| {
                ToolLinkError::Config(format!("failure plan: bad ordinal {:?}", &row[1]))
            })?;
            plan.inject(&row[0], ordinal, &row[2])?;
        }
        Ok(plan)
    }
}

/// Per-connection state.
#[derive(Debug, Clone, Default)]
pub struct Session {
    pub client_id: Option<String>,
    pub license: Option<String>,
}

pub struct MockServer {
    registry: RwLock<Registry>,
    seed: u64,
    fixtures: Vec<Fixture>,
    plan: FailurePlan,
    ordinals: Mutex<HashMap<String, u64>>,
    files: RwLock<BTreeMap<String, Vec<u8>>>,
    // None: any license is accepted and nothing is throttled
    access: Mutex<Option<AccessState>>,
    clock: Box<dyn Clock>,
}

impl std::fmt::Debug for MockServer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockServer")
            .field("seed", &self.seed)
            .field("fixtures", &self.fixtures.len())
            .finish()
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn fixture_value(raw: &str) -> Value {
    match raw.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => Value::String(raw.to_string()),
    }
}

impl MockServer {
    pub fn new(registry: Registry, seed: u64) -> Self {
        MockServer {
            registry: RwLock::new(registry),
            seed,
            fixtures: Vec::new(),
            plan: FailurePlan::new(),
            ordinals: Mutex::new(HashMap::new()),
            files: RwLock::new(BTreeMap::new()),
            access: Mutex::new(None),
            clock: Box::new(SystemClock),
        }
    }

    pub fn with_fixtures(mut self, fixtures: Vec<Fixture>) -> Self {
        self.fixtures = fixtures;
        self
    }

    pub fn with_failure_plan(mut self, plan: FailurePlan) -> Self {
        self.plan = plan;
        self
    }

    pub fn with_access(self, access: AccessState) -> Self {
        *self.access.lock().unwrap() = Some(access);
        self
    }

    pub fn with_clock(mut self, clock: impl Clock + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn register(&self, tool: ToolDescriptor) -> Result<(), ToolLinkError> {
        self.registry.write().unwrap().register(tool)
    }

    pub fn registry(&self) -> Registry {
        self.registry.read().unwrap().clone()
    }

    /// Places a file on the server, replacing any previous content.
    pub fn put_file(&self, remote_path: &str, content: Vec<u8>) {
        self.files
            .write()
            .unwrap()
            .insert(remote_path.to_string(), content);
    }

    pub fn file(&self, remote_path: &str) -> Option<Vec<u8>> {
        self.files.read().unwrap().get(remote_path).cloned()
    }

    /// Calls made so far to `tool`.
    pub fn ordinal(&self, tool: &str) -> u64 {
        self.ordinals
            .lock()
            .unwrap()
            .get(tool)
            .copied()
            .unwrap_or(0)
    }

    fn unit_interval(&self, name: &str, canon: &str, key: &str) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for part in [name, canon, key] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        let d = h.finalize();
        let mut top = [0u8; 8];
        top.copy_from_slice(&d[..8]);
        // 53 bits so the fraction is exact in f64
        (u64::from_be_bytes(top) >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Fixture value for `key`; an exact digest beats the wildcard.
    fn fixture(&self, name: &str, digest: &str, key: &str) -> Option<&str> {
        let rows = self
            .fixtures
            .iter()
            .filter(|f| f.tool_name == name && f.key == key);
        let mut wildcard = None;
        for f in rows {
            if f.arg_digest == digest {
                return Some(&f.value);
            }
            if f.arg_digest == "*" {
                wildcard = Some(f.value.as_str());
            }
        }
        wildcard
    }

    /// Executes one call against the simulated tool.
    pub fn mock_execute(
        &self,
        name: &str,
        args: &Map<String, Value>,
    ) -> Result<ToolResponse, ToolLinkError> {
        let desc = self
            .registry
            .read()
            .unwrap()
            .check_call(name, args)?
            .clone();
        let ordinal = {
            let mut ords = self.ordinals.lock().unwrap();
            let n = ords.entry(name.to_string()).or_insert(0);
            *n += 1;
            *n
        };
        if let Some(text) = self.plan.get(name, ordinal) {
            return Ok(ToolResponse::tool_error(name, text));
        }

        let canon = canonical_args(args);
        let digest = arg_digest(args);
        let mut resp = ToolResponse::ok(name);
        for (key, spec) in &desc.outputs {
            let value = match self.fixture(name, &digest, key) {
                Some(raw) => fixture_value(raw),
                None => {
                    let u = self.unit_interval(name, &canon, key);
                    json!(round3(spec.min + u * (spec.max - spec.min)))
                }
            };
            resp.values.insert(key.clone(), value);
        }
        // fixture keys not declared as outputs still come through
        let mut extra: Vec<&Fixture> = self
            .fixtures
            .iter()
            .filter(|f| {
                f.tool_name == name
                    && !f.key.starts_with(FILE_KEY_PREFIX)
                    && !desc.outputs.contains_key(&f.key)
                    && (f.arg_digest == digest || f.arg_digest == "*")
            })
            .collect();
        extra.sort_by_key(|f| f.arg_digest == "*");
        for f in extra {
            resp.values
                .entry(f.key.clone())
                .or_insert_with(|| fixture_value(&f.value));
        }

        if desc.returns_files {
            let names: Vec<String> = if desc.files.is_empty() {
                vec!["output.dat".to_string()]
            } else {
                desc.files.iter().map(|f| f.name.clone()).collect()
            };
            for file in names {
                let path = format!("/scp/{name}/{}/{file}", &digest[..12]);
                let key = format!("{FILE_KEY_PREFIX}{file}");
                let content = match self.fixture(name, &digest, &key) {
                    Some(raw) => raw.as_bytes().to_vec(),
                    None => format!(
                        "tool={name}\nfile={file}\nargs={canon}\nseed={}\n",
                        self.seed
                    )
                    .into_bytes(),
                };
                self.put_file(&path, content);
                resp.file_paths.push(path);
            }
        }
        Ok(resp)
    }

    /// Processes one request line and returns the reply line.
    pub fn handle_line(&self, session: &mut Session, line: &str) -> String {
        let req = match parse_request(line) {
            Ok(r) => r,
            Err(e) => return Reply::failure(0, &e).to_line(),
        };
        let id = req.id;
        let result = self.dispatch(session, req.kind, &req.payload);
        match result {
            Ok(v) => Reply::success(id, v).to_line(),
            Err(e) => Reply::failure(id, &e).to_line(),
        }
    }

    fn dispatch(
        &self,
        session: &mut Session,
        kind: RequestKind,
        payload: &Value,
    ) -> Result<Value, ToolLinkError> {
        let text = |key: &str| {
            payload
                .get(key)
                .and_then(Value::as_str)
                .map(String::from)
                .ok_or_else(|| ToolLinkError::Protocol(format!("payload field {key} missing")))
        };
        if kind == RequestKind::Auth {
            let client = text("client")?;
            let license = text("license")?;
            let access = self.access.lock().unwrap();
            if let Some(a) = access.as_ref() {
                if !a.license_keys.contains(&license) {
                    return Err(ToolLinkError::AuthRejected);
                }
            }
            session.client_id = Some(client);
            session.license = Some(license);
            return Ok(json!({}));
        }

        let (Some(client), Some(license)) = (&session.client_id, &session.license) else {
            return Err(ToolLinkError::Unauthenticated);
        };
        if let Some(a) = self.access.lock().unwrap().as_mut() {
            match a.admit(client, license, self.clock.now()) {
                Admission::Admitted => {}
                Admission::AuthRejected => return Err(ToolLinkError::AuthRejected),
                Admission::Throttled => return Err(ToolLinkError::Throttled),
            }
        }

        match kind {
            RequestKind::List => {
                let tools = self.registry.read().unwrap().list();
                Ok(json!({ "tools": tools }))
            }
            RequestKind::Call => {
                let name = text("name")?;
                let args = match payload.get("args") {
                    None | Some(Value::Null) => Map::new(),
                    Some(Value::Object(m)) => m.clone(),
                    Some(_) => {
                        return Err(ToolLinkError::SchemaViolation(
                            "args must be an object".into(),
                        ))
                    }
                };
                let resp = self.mock_execute(&name, &args)?;
                Ok(serde_json::to_value(resp).expect("response serializes"))
            }
            RequestKind::Fetch => {
                let path = text("path")?;
                let bytes = self
                    .file(&path)
                    .ok_or(ToolLinkError::RemoteMissing(path.clone()))?;
                Ok(json!({ "path": path, "content": STANDARD.encode(bytes) }))
            }
            RequestKind::Auth => unreachable!("handled above"),
        }
    }
}
