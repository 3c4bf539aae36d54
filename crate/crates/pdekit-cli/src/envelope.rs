//! The JSON report envelope. serde_json's default map keeps keys sorted, so
//! serialization is deterministic.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "pdekit.report/1";

pub fn digest(input: &str) -> String {
    format!("sha256:{:x}", Sha256::digest(input.as_bytes()))
}

pub struct EnvelopeParts<'a> {
    pub command: &'a str,
    pub input: &'a str,
    pub payload: Option<Value>,
    pub log: Vec<String>,
    pub timing_ms: Option<f64>,
    pub error: Option<(&'a str, String)>,
}

pub fn envelope(p: EnvelopeParts) -> Value {
    json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "input_digest": digest(p.input),
        "command": p.command,
        "payload": p.payload,
        "log": p.log,
        "timing": p.timing_ms.map(|ms| json!({ "ms": ms })),
        "error": p.error.map(|(kind, message)| json!({ "kind": kind, "message": message })),
    })
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
