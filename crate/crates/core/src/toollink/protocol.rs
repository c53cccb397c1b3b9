//! Wire records. One JSON object per line in each direction.

use super::ToolLinkError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Auth,
    Call,
    List,
    Fetch,
}

/// Payloads:
/// auth `{client, license}`, call `{name, args}`, list `{}`, fetch `{path}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub kind: RequestKind,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nearest: Option<String>,
}

/// Replies echo the request id. `payload` is meaningful only when `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub id: u64,
    pub ok: bool,
    #[serde(default)]
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl Request {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

impl Reply {
    pub fn success(id: u64, payload: Value) -> Self {
        Reply {
            id,
            ok: true,
            payload,
            error: None,
        }
    }

    pub fn failure(id: u64, err: &ToolLinkError) -> Self {
        let nearest = match err {
            ToolLinkError::UnknownTool { nearest, .. } => nearest.clone(),
            _ => None,
        };
        let message = match err {
            ToolLinkError::UnknownTool { name, .. }
            | ToolLinkError::NamingViolation(name)
            | ToolLinkError::SchemaViolation(name)
            | ToolLinkError::RemoteMissing(name)
            | ToolLinkError::EmptyFile(name)
            | ToolLinkError::Protocol(name)
            | ToolLinkError::TransportError(name)
            | ToolLinkError::Config(name)
            | ToolLinkError::LocalIo(name) => name.clone(),
            ToolLinkError::DecodeError { path, .. } => path.clone(),
            other => other.to_string(),
        };
        Reply {
            id,
            ok: false,
            payload: Value::Null,
            error: Some(WireError {
                code: err.code().to_string(),
                message,
                nearest,
            }),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("reply serializes")
    }

    /// Payload of a successful reply, or the error it carries.
    pub fn into_result(self) -> Result<Value, ToolLinkError> {
        if self.ok {
            return Ok(self.payload);
        }
        let e = self
            .error
            .ok_or_else(|| ToolLinkError::Protocol("failed reply without error record".into()))?;
        Err(match e.code.as_str() {
            "unknown_tool" => ToolLinkError::UnknownTool {
                name: e.message,
                nearest: e.nearest,
            },
            "naming_violation" => ToolLinkError::NamingViolation(e.message),
            "schema_violation" => ToolLinkError::SchemaViolation(e.message),
            "auth_rejected" => ToolLinkError::AuthRejected,
            "throttled" => ToolLinkError::Throttled,
            "unauthenticated" => ToolLinkError::Unauthenticated,
            "remote_missing" => ToolLinkError::RemoteMissing(e.message),
            "empty_file" => ToolLinkError::EmptyFile(e.message),
            _ => ToolLinkError::Protocol(format!("{}: {}", e.code, e.message)),
        })
    }
}

pub fn parse_request(line: &str) -> Result<Request, ToolLinkError> {
    serde_json::from_str(line.trim_end())
        .map_err(|e| ToolLinkError::Protocol(format!("bad request: {e}")))
}

pub fn parse_reply(line: &str) -> Result<Reply, ToolLinkError> {
    serde_json::from_str(line.trim_end())
        .map_err(|e| ToolLinkError::Protocol(format!("bad reply: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn record_shapes() {
        let r = Request {
            id: 7,
            kind: RequestKind::List,
            payload: json!({}),
        };
        assert_eq!(r.to_line(), r#"{"id":7,"kind":"list","payload":{}}"#);
        assert_eq!(parse_request(&r.to_line()).unwrap(), r);
        assert!(parse_request(r#"{"id":1,"kind":"delete"}"#).is_err());
    }

    #[test]
    fn errors_survive_the_wire() {
        for err in [
            ToolLinkError::UnknownTool {
                name: "goca_pipeline".into(),
                nearest: Some("run_goca_pipeline".into()),
            },
            ToolLinkError::NamingViolation("a-b".into()),
            ToolLinkError::SchemaViolation("missing required argument x".into()),
            ToolLinkError::AuthRejected,
            ToolLinkError::Throttled,
            ToolLinkError::Unauthenticated,
            ToolLinkError::RemoteMissing("/scp/x".into()),
        ] {
            let line = Reply::failure(3, &err).to_line();
            assert_eq!(parse_reply(&line).unwrap().into_result(), Err(err));
        }
    }
}
