//! Canonical argument rendering and digests.

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Renders a number with 9 significant digits.
fn number(n: &serde_json::Number) -> String {
    match n.as_f64() {
        Some(x) if x == 0.0 => "0".to_string(),
        Some(x) => format!("{x:.8e}"),
        None => n.to_string(),
    }
}

fn render(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&number(n)),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => render_map(map, out),
    }
}

fn render_map(map: &Map<String, Value>, out: &mut String) {
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    out.push('{');
    for (i, k) in keys.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&Value::String((*k).clone()).to_string());
        out.push(':');
        render(&map[*k], out);
    }
    out.push('}');
}

/// Sorted keys, numbers at 9 significant digits.
pub fn canonical_args(args: &Map<String, Value>) -> String {
    let mut out = String::new();
    render_map(args, &mut out);
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Seed-independent digest of a call's arguments, as used in fixture files.
pub fn arg_digest(args: &Map<String, Value>) -> String {
    sha256_hex(canonical_args(args).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn key_order_and_precision() {
        let a = json!({"b": 1.0, "a": "x"}).as_object().unwrap().clone();
        let b = json!({"a": "x", "b": 1.0000000001})
            .as_object()
            .unwrap()
            .clone();
        assert_eq!(canonical_args(&a), r#"{"a":"x","b":1.00000000e0}"#);
        assert_eq!(arg_digest(&a), arg_digest(&b));
        let c = json!({"a": "x", "b": 1.00001}).as_object().unwrap().clone();
        assert_ne!(arg_digest(&a), arg_digest(&c));
        let ints = json!({"n": 20}).as_object().unwrap().clone();
        let floats = json!({"n": 20.0}).as_object().unwrap().clone();
        assert_eq!(canonical_args(&ints), canonical_args(&floats));
    }
}
