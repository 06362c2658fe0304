use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn config_hash(parameters: &Value) -> String {
    let bytes = serde_json::to_vec(parameters).expect("parameters serialize");
    format!("{:x}", Sha256::digest(&bytes))
}

/// Wraps command results with the metadata every report carries.
pub fn envelope(command: &str, parameters: Value, threads: usize, results: Value) -> Value {
    json!({
        "command": command,
        "tool": { "name": "congest", "version": VERSION },
        "config_hash": config_hash(&parameters),
        "seed": parameters.get("seed").cloned().unwrap_or(Value::Null),
        "samples": parameters.get("samples").cloned().unwrap_or(Value::Null),
        "parameters": parameters,
        "runtime": { "threads": threads },
        "results": results,
    })
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    let path = dir.join(name);
    fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn coord_header(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn nums(v: &[f64]) -> Vec<String> {
    v.iter().map(f64::to_string).collect()
}
