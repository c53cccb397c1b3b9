//! The planner port and a line-scripted planner.
//!
//! Script lines, one action each (`#` starts a comment):
//!
//! ```text
//! plan <field> <text>
//! call <tool|$nearest> <json args>
//! retry <json args>
//! list
//! fetch $last|<remote path>
//! claim <id> count <n> <file> <counter>
//! claim <id> tool <value> resp:<n> <key>
//! claim <id> lit <value> authors=..;year=..;doi=..
//! claim <id> interp <value> <rationale>
//! funnel <tier> <in> <out> <file> <counter>
//! advance
//! abort <reason>
//! ```
//!
//! A line may be prefixed with `?ok` or `?err` (optionally `?err:<code>`)
//! to run only when the last tool call ended that way; otherwise it is
//! skipped. `<file>` is `$fetched:<file name>` or a local path. Values are
//! numbers or double-quoted text. `$nearest` is the suggestion carried by
//! the most recent unknown-tool error.

use super::audit::{Citation, ClaimValue};
use super::count::CounterKind;
use super::plan::PlanField;
use super::GateError;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchTarget {
    /// Every file of the most recent tool response.
    Last,
    Path(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileRef {
    /// A downloaded artifact, by its file name.
    Fetched(String),
    Local(String),
}

impl FileRef {
    fn parse(token: &str) -> FileRef {
        match token.strip_prefix("$fetched:") {
            Some(name) => FileRef::Fetched(name.to_string()),
            None => FileRef::Local(token.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClaimBasis {
    Count {
        file: FileRef,
        counter: CounterKind,
    },
    /// `response` is the 1-based index of a received tool response.
    Tool {
        response: usize,
        key: String,
    },
    Literature(Citation),
    Interpretation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimDecl {
    pub id: String,
    pub value: ClaimValue,
    pub basis: ClaimBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlannerAction {
    FillPlan {
        field: PlanField,
        value: String,
    },
    CallTool {
        name: String,
        args: Map<String, Value>,
    },
    /// Repeats the last call with new arguments.
    RetryWith(Map<String, Value>),
    ListTools,
    Fetch(FetchTarget),
    DeclareClaim(ClaimDecl),
    RecordFunnel {
        tier: u8,
        molecules_in: u64,
        molecules_out: u64,
        file: FileRef,
        counter: CounterKind,
    },
    AdvancePhase,
    Abort(String),
}

impl PlannerAction {
    /// Actions that talk to the tool server.
    pub fn is_server_action(&self) -> bool {
        matches!(
            self,
            PlannerAction::CallTool { .. }
                | PlannerAction::RetryWith(_)
                | PlannerAction::ListTools
                | PlannerAction::Fetch(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PlannerAction::FillPlan { .. } => "plan",
            PlannerAction::CallTool { .. } => "call",
            PlannerAction::RetryWith(_) => "retry",
            PlannerAction::ListTools => "list",
            PlannerAction::Fetch(_) => "fetch",
            PlannerAction::DeclareClaim(_) => "claim",
            PlannerAction::RecordFunnel { .. } => "funnel",
            PlannerAction::AdvancePhase => "advance",
            PlannerAction::Abort(_) => "abort",
        }
    }
}

/// How the last tool call ended.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum LastOutcome {
    #[default]
    Nothing,
    Ok,
    Err {
        code: String,
        nearest: Option<String>,
    },
}

pub trait Planner {
    /// Next action, or `None` when the planner has nothing more to do.
    fn next_action(&mut self, last: &LastOutcome) -> Option<PlannerAction>;
}

#[derive(Debug, Clone, PartialEq)]
enum Guard {
    Always,
    Ok,
    Err(Option<String>),
}

#[derive(Debug, Clone, PartialEq)]
enum Step {
    Action(PlannerAction),
    CallNearest(Map<String, Value>),
}

#[derive(Debug, Clone, PartialEq)]
struct Line {
    guard: Guard,
    step: Step,
}

/// Replays a parsed script, branching on the last call outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedPlanner {
    lines: Vec<Line>,
    pos: usize,
    nearest: Option<String>,
}

fn split_token(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}

/// A number or a double-quoted string, followed by the rest of the line.
fn split_value(s: &str) -> Result<(ClaimValue, &str), String> {
    let s = s.trim_start();
    if let Some(body) = s.strip_prefix('"') {
        let end = body.find('"').ok_or("unterminated quoted value")?;
        return Ok((
            ClaimValue::Text(body[..end].to_string()),
            body[end + 1..].trim_start(),
        ));
    }
    let (tok, rest) = split_token(s);
    let x: f64 = tok
        .parse()
        .map_err(|_| format!("expected a number or quoted text, got {tok:?}"))?;
    Ok((ClaimValue::Number(x), rest))
}

fn parse_args(s: &str) -> Result<Map<String, Value>, String> {
    if s.trim().is_empty() {
        return Ok(Map::new());
    }
    match serde_json::from_str::<Value>(s) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err("arguments must be a JSON object".into()),
        Err(e) => Err(format!("arguments: {e}")),
    }
}

fn need<'a>(tok: &'a str, what: &str) -> Result<&'a str, String> {
    if tok.is_empty() {
        Err(format!("missing {what}"))
    } else {
        Ok(tok)
    }
}

fn parse_number<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T, String> {
    need(tok, what)?
        .parse()
        .map_err(|_| format!("bad {what} {tok:?}"))
}

fn parse_counter(s: &str) -> Result<CounterKind, String> {
    need(s.trim(), "counter")?
        .parse()
        .map_err(|e: GateError| e.to_string())
}

fn parse_step(text: &str) -> Result<Step, String> {
    let (cmd, rest) = split_token(text);
    let action = match cmd {
        "plan" => {
            let (field, value) = split_token(rest);
            let field: PlanField = need(field, "plan field")?
                .parse()
                .map_err(|e: GateError| e.to_string())?;
            PlannerAction::FillPlan {
                field,
                value: value.to_string(),
            }
        }
        "call" => {
            let (name, args) = split_token(rest);
            let args = parse_args(args)?;
            if name == "$nearest" {
                return Ok(Step::CallNearest(args));
            }
            PlannerAction::CallTool {
                name: need(name, "tool name")?.to_string(),
                args,
            }
        }
        "retry" => PlannerAction::RetryWith(parse_args(rest)?),
        "list" => PlannerAction::ListTools,
        "fetch" => match need(rest.trim(), "fetch target")? {
            "$last" => PlannerAction::Fetch(FetchTarget::Last),
            path => PlannerAction::Fetch(FetchTarget::Path(path.to_string())),
        },
        "claim" => {
            let (id, rest) = split_token(rest);
            let id = need(id, "claim id")?.to_string();
            let (basis, rest) = split_token(rest);
            let (value, rest) = split_value(rest)?;
            let basis = match basis {
                "count" => {
                    let (file, counter) = split_token(rest);
                    ClaimBasis::Count {
                        file: FileRef::parse(need(file, "source file")?),
                        counter: parse_counter(counter)?,
                    }
                }
                "tool" => {
                    let (resp, key) = split_token(rest);
                    let n = need(resp, "response")?
                        .strip_prefix("resp:")
                        .ok_or("expected resp:<n>")?;
                    ClaimBasis::Tool {
                        response: parse_number(n, "response index")?,
                        key: need(key.trim(), "key")?.to_string(),
                    }
                }
                "lit" => ClaimBasis::Literature(Citation::parse(rest)),
                "interp" => ClaimBasis::Interpretation(rest.trim().to_string()),
                other => return Err(format!("unknown claim basis {other:?}")),
            };
            PlannerAction::DeclareClaim(ClaimDecl { id, value, basis })
        }
        "funnel" => {
            let (tier, rest) = split_token(rest);
            let (molecules_in, rest) = split_token(rest);
            let (molecules_out, rest) = split_token(rest);
            let (file, counter) = split_token(rest);
            PlannerAction::RecordFunnel {
                tier: parse_number(tier, "tier")?,
                molecules_in: parse_number(molecules_in, "input count")?,
                molecules_out: parse_number(molecules_out, "output count")?,
                file: FileRef::parse(need(file, "source file")?),
                counter: parse_counter(counter)?,
            }
        }
        "advance" => PlannerAction::AdvancePhase,
        "abort" => PlannerAction::Abort(rest.trim().to_string()),
        other => return Err(format!("unknown action {other:?}")),
    };
    Ok(Step::Action(action))
}

impl ScriptedPlanner {
    pub fn parse(text: &str) -> Result<ScriptedPlanner, GateError> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let err = |detail: String| GateError::Script {
                line: i + 1,
                detail,
            };
            let (guard, body) = match t.strip_prefix('?') {
                Some(g) => {
                    let (g, body) = split_token(g);
                    let guard = match g {
                        "ok" => Guard::Ok,
                        "err" => Guard::Err(None),
                        _ => match g.strip_prefix("err:") {
                            Some(code) if !code.is_empty() => Guard::Err(Some(code.to_string())),
                            _ => return Err(err(format!("unknown condition ?{g}"))),
                        },
                    };
                    (guard, body)
                }
                None => (Guard::Always, t),
            };
            lines.push(Line {
                guard,
                step: parse_step(body).map_err(err)?,
            });
        }
        Ok(ScriptedPlanner {
            lines,
            pos: 0,
            nearest: None,
        })
    }

    pub fn from_actions(actions: Vec<PlannerAction>) -> ScriptedPlanner {
        let lines = actions
            .into_iter()
            .map(|a| Line {
                guard: Guard::Always,
                step: Step::Action(a),
            })
            .collect();
        ScriptedPlanner {
            lines,
            pos: 0,
            nearest: None,
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

impl Planner for ScriptedPlanner {
    fn next_action(&mut self, last: &LastOutcome) -> Option<PlannerAction> {
        if let LastOutcome::Err {
            nearest: Some(n), ..
        } = last
        {
            self.nearest = Some(n.clone());
        }
        while let Some(line) = self.lines.get(self.pos) {
            self.pos += 1;
            let run = match (&line.guard, last) {
                (Guard::Always, _) => true,
                (Guard::Ok, LastOutcome::Ok) => true,
                (Guard::Err(None), LastOutcome::Err { .. }) => true,
                (Guard::Err(Some(want)), LastOutcome::Err { code, .. }) => want == code,
                _ => false,
            };
            if !run {
                continue;
            }
            return Some(match &line.step {
                Step::Action(a) => a.clone(),
                Step::CallNearest(args) => match &self.nearest {
                    Some(name) => PlannerAction::CallTool {
                        name: name.clone(),
                        args: args.clone(),
                    },
                    None => PlannerAction::Abort("no suggested tool name to call".into()),
                },
            });
        }
        None
    }
}
