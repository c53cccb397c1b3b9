//! The phase state machine.

use super::audit::{label_claim, AuditEntry, ClaimCategory, ClaimSource, ClaimValue};
use super::checkpoint::{
    checkpoint_a, checkpoint_c, CheckpointReport, IntegrityRow, IntegrityTable,
};
use super::count::count_gate;
use super::funnel::FunnelLedger;
use super::plan::Phase0Plan;
use super::planner::{
    ClaimBasis, ClaimDecl, FetchTarget, FileRef, LastOutcome, Planner, PlannerAction,
};
use super::report::render_report;
use super::runlog::RunLog;
use super::GateError;
use crate::skills::{classify_name, NameClass, SkillDocument};
use crate::toollink::{
    enforce_download_policy, Category, Client, FileArtifact, PolicyDecision, Registry,
    ResponseStatus, ToolLinkError, ToolResponse, Transport,
};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Plan,
    Execute,
    Report,
    Done,
}

#[derive(Debug, Clone, Default)]
pub struct EngineConfig {
    pub task: String,
    pub client_id: String,
    pub license: String,
    /// Descriptors used by checkpoint A when the client has not listed
    /// the tools itself.
    pub registry: Option<Registry>,
    /// Minimum values per output key, checked at checkpoint A.
    pub confidence_thresholds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: Result<(), GateError>,
    /// Phase in which the run ended.
    pub phase: Phase,
    pub log: RunLog,
    pub plan: Phase0Plan,
    pub checkpoints: Vec<CheckpointReport>,
    pub claims: Vec<AuditEntry>,
    pub funnel: FunnelLedger,
    pub integrity: Option<IntegrityTable>,
    pub report: Option<String>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.result.is_ok() && self.report.is_some()
    }

    pub fn all_gates_passed(&self) -> bool {
        self.completed() && self.checkpoints.iter().all(CheckpointReport::passed)
    }
}

#[derive(Debug, Clone)]
struct CallRecord {
    response: ToolResponse,
    closed: bool,
    checkpoint_passed: bool,
}

/// Errors after which no further server traffic makes sense.
fn is_terminal(e: &ToolLinkError) -> bool {
    matches!(
        e,
        ToolLinkError::TransportError(_)
            | ToolLinkError::Protocol(_)
            | ToolLinkError::AuthRejected
            | ToolLinkError::Unauthenticated
            | ToolLinkError::LocalIo(_)
    )
}

struct Run<'a, T: Transport> {
    client: &'a mut Client<T>,
    config: &'a EngineConfig,
    log: RunLog,
    plan: Phase0Plan,
    phase: Phase,
    last: LastOutcome,
    calls: Vec<CallRecord>,
    artifacts: Vec<FileArtifact>,
    last_call: Option<String>,
    checkpoints: Vec<CheckpointReport>,
    claims: Vec<ClaimDecl>,
    entries: Vec<AuditEntry>,
    rejected: Vec<(String, String, String)>,
    funnel: FunnelLedger,
}

impl<T: Transport> Run<'_, T> {
    fn registry(&self) -> Option<&Registry> {
        self.client
            .cached_registry()
            .or(self.config.registry.as_ref())
    }

    fn record_error(&mut self, action: &str, e: &GateError) {
        self.log.append(
            "ERROR",
            json!({"action": action, "code": e.code(), "message": e.to_string()}),
        );
    }

    /// Runs the download policy and checkpoint A over every response not
    /// yet closed. A blocked download ends the run.
    fn close_open(&mut self) -> Result<(), GateError> {
        for i in 0..self.calls.len() {
            if self.calls[i].closed {
                continue;
            }
            let resp = &self.calls[i].response;
            if let PolicyDecision::Blocked(paths) = enforce_download_policy(resp, &self.artifacts) {
                self.log
                    .append("BLOCKED", json!({"response": i + 1, "paths": paths}));
                return Err(GateError::Blocked(paths));
            }
            let desc = self.registry().and_then(|r| r.get(&resp.tool_name));
            let report = checkpoint_a(
                resp,
                desc,
                &self.artifacts,
                &self.config.confidence_thresholds,
            );
            self.log.append(
                "CHECKPOINT_A",
                json!({"response": i + 1, "passed": report.passed(), "rules": report.rules()}),
            );
            self.calls[i].closed = true;
            self.calls[i].checkpoint_passed = report.passed();
            self.checkpoints.push(report);
        }
        Ok(())
    }

    fn call(&mut self, name: String, args: Map<String, Value>) -> Result<(), GateError> {
        self.close_open()?;
        self.log.append("CALL", json!({"tool": name, "args": args}));
        self.last_call = Some(name.clone());
        let result = match classify_name(&name) {
            NameClass::ToolName => self.client.call_tool(&name, &args),
            _ => Err(ToolLinkError::NamingViolation(name.clone())),
        };
        match result {
            Ok(resp) => {
                let files: Vec<(String, Category)> = resp
                    .file_paths
                    .iter()
                    .map(|p| {
                        let cat = self
                            .registry()
                            .and_then(|r| r.get(&name))
                            .map_or(Category::A, |d| d.category_of(p));
                        (p.clone(), cat)
                    })
                    .collect();
                for (path, cat) in files {
                    if !self.artifacts.iter().any(|a| a.remote_path == path) {
                        self.artifacts.push(FileArtifact::pending(&path, cat));
                    }
                }
                self.log.append(
                    "RESPONSE",
                    json!({
                        "response": self.calls.len() + 1,
                        "tool": resp.tool_name,
                        "status": resp.status,
                        "values": resp.values,
                        "files": resp.file_paths,
                        "error": resp.error_detail,
                    }),
                );
                self.last = match resp.status {
                    ResponseStatus::Ok => LastOutcome::Ok,
                    ResponseStatus::ToolError => LastOutcome::Err {
                        code: "tool_error".into(),
                        nearest: None,
                    },
                };
                self.calls.push(CallRecord {
                    response: resp,
                    closed: false,
                    checkpoint_passed: false,
                });
                Ok(())
            }
            Err(e) => {
                let nearest = match &e {
                    ToolLinkError::UnknownTool { nearest, .. } => nearest.clone(),
                    _ => None,
                };
                self.log.append("ERROR", json!({"action": "call", "code": e.code(), "message": e.to_string(), "nearest": nearest}));
                self.last = LastOutcome::Err {
                    code: e.code().to_string(),
                    nearest,
                };
                if is_terminal(&e) {
                    return Err(e.into());
                }
                Ok(())
            }
        }
    }

    fn fetch(&mut self, target: FetchTarget) -> Result<(), GateError> {
        let paths: Vec<String> = match target {
            FetchTarget::Path(p) => vec![p],
            FetchTarget::Last => self
                .calls
                .last()
                .map(|c| c.response.file_paths.clone())
                .unwrap_or_default(),
        };
        for path in paths {
            let category = self
                .artifacts
                .iter()
                .find(|a| a.remote_path == path)
                .map_or(Category::A, |a| a.category);
            match self.client.fetch_file(&path, category) {
                Ok(art) => {
                    self.log.append(
                        "FETCH",
                        json!({"path": path, "bytes": art.local_size_bytes, "sha256": art.sha256}),
                    );
                    match self.artifacts.iter_mut().find(|a| a.remote_path == path) {
                        Some(slot) => *slot = art,
                        None => self.artifacts.push(art),
                    }
                }
                Err(e) => {
                    self.log.append("ERROR", json!({"action": "fetch", "path": path, "code": e.code(), "message": e.to_string()}));
                    if is_terminal(&e) {
                        return Err(e.into());
                    }
                }
            }
        }
        Ok(())
    }

    fn resolve(&self, file: &FileRef) -> Result<(PathBuf, String), GateError> {
        match file {
            FileRef::Local(p) => Ok((PathBuf::from(p), p.clone())),
            FileRef::Fetched(name) => self
                .artifacts
                .iter()
                .rev()
                .find(|a| a.fetched && a.file_name() == name)
                .and_then(|a| a.local_path.clone().map(|p| (p, a.remote_path.clone())))
                .ok_or_else(|| GateError::FileMissing(PathBuf::from(format!("$fetched:{name}")))),
        }
    }

    /// Tool response that produced a fetched file, 1-based.
    fn producer(&self, remote_path: &str) -> Option<(usize, &str)> {
        self.calls
            .iter()
            .enumerate()
            .find(|(_, c)| c.response.file_paths.iter().any(|p| p == remote_path))
            .map(|(i, c)| (i + 1, c.response.tool_name.as_str()))
    }

    fn claim(&mut self, decl: ClaimDecl) {
        let source = match &decl.basis {
            ClaimBasis::Count { file, .. } => {
                let remote = self.resolve(file).map(|(_, r)| r).unwrap_or_default();
                match self.producer(&remote) {
                    Some((n, tool)) => (
                        ClaimCategory::ToolComputed,
                        ClaimSource::Tool {
                            tool_name: tool.to_string(),
                            response_id: n as u64,
                        },
                    ),
                    None => (
                        ClaimCategory::ToolComputed,
                        ClaimSource::Tool {
                            tool_name: String::new(),
                            response_id: 0,
                        },
                    ),
                }
            }
            ClaimBasis::Tool { response, .. } => {
                let tool = self
                    .calls
                    .get(response.wrapping_sub(1))
                    .map(|c| c.response.tool_name.clone())
                    .unwrap_or_default();
                (
                    ClaimCategory::ToolComputed,
                    ClaimSource::Tool {
                        tool_name: tool,
                        response_id: *response as u64,
                    },
                )
            }
            ClaimBasis::Literature(c) => (
                ClaimCategory::LiteratureValue,
                ClaimSource::Citation(c.clone()),
            ),
            ClaimBasis::Interpretation(r) => (
                ClaimCategory::AgentInterpretation,
                ClaimSource::Rationale(r.clone()),
            ),
        };
        match label_claim(&decl.id, decl.value.clone(), source.0, source.1) {
            Ok(entry) => {
                self.log.append(
                    "CLAIM",
                    json!({"id": decl.id, "value": decl.value.to_string(), "category": entry.category.number()}),
                );
                self.entries.push(entry);
                self.claims.push(decl);
            }
            Err(e) => {
                self.log.append(
                    "CLAIM_REJECTED",
                    json!({"id": decl.id, "code": e.code(), "message": e.to_string()}),
                );
                self.rejected
                    .push((decl.id.clone(), decl.value.to_string(), e.to_string()));
            }
        }
    }

    fn funnel(
        &mut self,
        tier: u8,
        molecules_in: u64,
        molecules_out: u64,
        file: FileRef,
        counter: super::count::CounterKind,
    ) -> Result<(), GateError> {
        let (path, _) = self.resolve(&file)?;
        let rec =
            self.funnel
                .record_funnel_tier(tier, molecules_in, molecules_out, &path, &counter)?;
        self.log.append(
            "FUNNEL",
            json!({"tier": tier, "in": molecules_in, "out": molecules_out, "actual": rec.actual_out(), "verified": rec.verified}),
        );
        Ok(())
    }

    fn integrity_rows(&self) -> Vec<IntegrityRow> {
        let mut rows = Vec::new();
        for decl in &self.claims {
            let claimed = decl.value.to_string();
            let row = |source_file: String, verification: String, actual: String, matched: bool| {
                IntegrityRow {
                    claim_id: decl.id.clone(),
                    claimed: claimed.clone(),
                    source_file,
                    verification,
                    actual,
                    matched,
                }
            };
            match &decl.basis {
                ClaimBasis::Count { file, counter } => {
                    let claimed_n = decl
                        .value
                        .as_number()
                        .filter(|x| *x >= 0.0 && x.fract() == 0.0);
                    let r = match (self.resolve(file), claimed_n) {
                        (Err(e), _) => row(
                            format!("{file:?}"),
                            counter.to_string(),
                            format!("unavailable: {e}"),
                            false,
                        ),
                        (Ok((_, remote)), None) => row(
                            remote,
                            counter.to_string(),
                            "claim is not a count".into(),
                            false,
                        ),
                        (Ok((local, remote)), Some(n)) => {
                            match count_gate(n as u64, &local, counter) {
                                Ok(g) => row(
                                    remote,
                                    g.verification_note.clone(),
                                    g.actual.to_string(),
                                    g.passed,
                                ),
                                Err(e) => row(
                                    remote,
                                    counter.to_string(),
                                    format!("unavailable: {e}"),
                                    false,
                                ),
                            }
                        }
                    };
                    rows.push(r);
                }
                ClaimBasis::Tool { response, key } => {
                    let call = self.calls.get(response.wrapping_sub(1));
                    let source = call
                        .map(|c| format!("response {response} ({})", c.response.tool_name))
                        .unwrap_or_else(|| format!("response {response}"));
                    let verification = format!("value of {key}");
                    let r = match call {
                        None => row(source, verification, "no such response".into(), false),
                        Some(c) => {
                            let actual = c.response.values.get(key);
                            let matched = match (actual, &decl.value) {
                                (Some(Value::Number(a)), ClaimValue::Number(b)) => a
                                    .as_f64()
                                    .is_some_and(|a| (a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                                (Some(Value::String(a)), ClaimValue::Text(b)) => a == b,
                                _ => false,
                            };
                            let actual_text =
                                actual.map_or("missing".to_string(), Value::to_string);
                            if matched && !c.checkpoint_passed {
                                row(
                                    source,
                                    format!("{verification}; checkpoint A failed"),
                                    actual_text,
                                    false,
                                )
                            } else {
                                row(source, verification, actual_text, matched)
                            }
                        }
                    };
                    rows.push(r);
                }
                ClaimBasis::Literature(c) => {
                    if decl.value.as_number().is_some() {
                        rows.push(row(
                            format!("doi:{}", c.doi),
                            "literature citation, not computed".into(),
                            claimed.clone(),
                            true,
                        ));
                    }
                }
                ClaimBasis::Interpretation(_) => {
                    if decl.value.as_number().is_some() {
                        rows.push(row(
                            "none".into(),
                            "interpretation has no source value".into(),
                            "unverifiable".into(),
                            false,
                        ));
                    }
                }
            }
        }
        for (id, claimed, why) in &self.rejected {
            rows.push(IntegrityRow {
                claim_id: id.clone(),
                claimed: claimed.clone(),
                source_file: "none".into(),
                verification: why.clone(),
                actual: "rejected".into(),
                matched: false,
            });
        }
        for rec in self.funnel.records() {
            rows.push(IntegrityRow {
                claim_id: format!("funnel tier {} out", rec.tier),
                claimed: rec.molecules_out.to_string(),
                source_file: rec
                    .gate
                    .source_file
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                verification: rec.gate.verification_note.clone(),
                actual: rec.actual_out().to_string(),
                matched: rec.verified,
            });
        }
        rows
    }

    fn phase1(&mut self, planner: &mut dyn Planner) -> Result<(), GateError> {
        self.client
            .authenticate(&self.config.client_id, &self.config.license)?;
        self.log
            .append("AUTH", json!({"client": self.config.client_id}));
        if self.plan.mapping_gate_armed() {
            self.log.append("MAPPING_GATE", json!({"armed": true}));
        }
        while let Some(action) = planner.next_action(&self.last) {
            match action {
                PlannerAction::CallTool { name, args } => self.call(name, args)?,
                PlannerAction::RetryWith(args) => match self.last_call.clone() {
                    Some(name) => self.call(name, args)?,
                    None => return Err(GateError::OutOfPhase("retry before any call".into())),
                },
                PlannerAction::ListTools => {
                    self.close_open()?;
                    match self.client.list_tools() {
                        Ok(tools) => {
                            self.log.append("LIST", json!({"count": tools.len()}));
                        }
                        Err(e) => {
                            self.log.append("ERROR", json!({"action": "list", "code": e.code(), "message": e.to_string()}));
                            if is_terminal(&e) {
                                return Err(e.into());
                            }
                        }
                    }
                }
                PlannerAction::Fetch(target) => self.fetch(target)?,
                PlannerAction::DeclareClaim(decl) => self.claim(decl),
                PlannerAction::RecordFunnel {
                    tier,
                    molecules_in,
                    molecules_out,
                    file,
                    counter,
                } => self.funnel(tier, molecules_in, molecules_out, file, counter)?,
                PlannerAction::AdvancePhase => break,
                PlannerAction::Abort(reason) => return Err(GateError::Aborted(reason)),
                PlannerAction::FillPlan { field, .. } => {
                    return Err(GateError::OutOfPhase(format!(
                        "plan {} after the plan is ready",
                        field.as_str()
                    )))
                }
            }
        }
        self.close_open()
    }

    fn phase2(&mut self) -> Result<(IntegrityTable, String), GateError> {
        let table = IntegrityTable {
            rows: self.integrity_rows(),
        };
        let report = checkpoint_c(table.clone());
        let mismatched: Vec<&str> = table.mismatches().map(|r| r.claim_id.as_str()).collect();
        self.log.append(
            "CHECKPOINT_C",
            json!({"passed": report.passed(), "rows": table.rows.len(), "mismatches": mismatched}),
        );
        self.checkpoints.push(report.clone());
        report.into_result()?;
        let text = render_report(
            &self.config.task,
            &self.plan,
            &self.entries,
            self.funnel.records(),
            &table,
        );
        self.log.append(
            "REPORT",
            json!({"claims": self.entries.len(), "rows": table.rows.len()}),
        );
        Ok((table, text))
    }
}

/// Phase 0 alone: queries the planner until the plan is ready.
pub fn run_phase0(
    task: &str,
    skills: &[&SkillDocument],
    planner: &mut dyn Planner,
) -> Result<Phase0Plan, GateError> {
    let mut log = RunLog::new();
    let mut plan = Phase0Plan::new();
    let mut last = LastOutcome::Nothing;
    log.append("TASK", json!({"task": task}));
    phase0_loop(&mut plan, skills, planner, &mut last, &mut log)?;
    Ok(plan)
}

fn phase0_loop(
    plan: &mut Phase0Plan,
    skills: &[&SkillDocument],
    planner: &mut dyn Planner,
    last: &mut LastOutcome,
    log: &mut RunLog,
) -> Result<(), GateError> {
    for doc in skills {
        log.append(
            "READ",
            json!({"skill": doc.name, "tier": doc.tier.to_string()}),
        );
    }
    loop {
        if plan.missing().is_empty() {
            plan.mark_ready()?;
            let summary: BTreeMap<&str, String> = plan
                .summary()
                .into_iter()
                .map(|(f, s)| (f.as_str(), s))
                .collect();
            log.append("PLAN_READY", json!(summary));
            return Ok(());
        }
        let Some(action) = planner.next_action(last) else {
            return Err(GateError::PlanIncomplete(plan.missing()));
        };
        match action {
            PlannerAction::FillPlan { field, value } => {
                plan.fill(field, &value)?;
                log.append("PLAN", json!({"field": field.as_str(), "value": value}));
            }
            PlannerAction::Abort(reason) => return Err(GateError::Aborted(reason)),
            PlannerAction::AdvancePhase => plan.mark_ready()?,
            a if a.is_server_action() => {
                return Err(GateError::PrematureToolCall(a.kind().to_string()))
            }
            a => {
                return Err(GateError::OutOfPhase(format!(
                    "{} during planning",
                    a.kind()
                )))
            }
        }
    }
}

/// Runs all three phases against `client`. Every action and gate result is
/// appended to the run log, including the one that ended the run.
pub fn drive<T: Transport>(
    planner: &mut dyn Planner,
    client: &mut Client<T>,
    skills: &[&SkillDocument],
    config: &EngineConfig,
) -> RunOutcome {
    let mut run = Run {
        client,
        config,
        log: RunLog::new(),
        plan: Phase0Plan::new(),
        phase: Phase::Plan,
        last: LastOutcome::Nothing,
        calls: Vec::new(),
        artifacts: Vec::new(),
        last_call: None,
        checkpoints: Vec::new(),
        claims: Vec::new(),
        entries: Vec::new(),
        rejected: Vec::new(),
        funnel: FunnelLedger::new(),
    };
    run.log.append("TASK", json!({"task": config.task}));
    let mut integrity = None;
    let mut report = None;
    let result = (|| {
        phase0_loop(&mut run.plan, skills, planner, &mut run.last, &mut run.log)?;
        run.phase = Phase::Execute;
        run.phase1(planner)?;
        run.phase = Phase::Report;
        let (table, text) = match run.phase2() {
            Ok(v) => v,
            Err(e) => {
                integrity = run.checkpoints.last().and_then(|c| c.table.clone());
                return Err(e);
            }
        };
        integrity = Some(table);
        report = Some(text);
        run.phase = Phase::Done;
        Ok(())
    })();
    if let Err(e) = &result {
        run.record_error("run", e);
    }
    RunOutcome {
        result,
        phase: run.phase,
        log: run.log,
        plan: run.plan,
        checkpoints: run.checkpoints,
        claims: run.entries,
        funnel: run.funnel,
        integrity,
        report,
    }
}
