use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success = 0,
    Rejected = 1,
    Indeterminate = 2,
    InputError = 3,
}

#[derive(Debug)]
pub struct Report {
    pub body: Value,
    pub outcome: Outcome,
}

impl Report {
    pub fn new(body: Value, outcome: Outcome) -> Self {
        Report { body, outcome }
    }
}

pub fn render(body: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(body).expect("reports are plain JSON");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut out = String::new();
            flatten(body, "", &mut out);
            out
        }
    }
}

/// One `path: value` line per scalar, paths in document order.
fn flatten(v: &Value, path: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(child, &p, out);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            let _ = writeln!(out, "{path}: [{}]", parts.join(", "));
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(child, &format!("{path}[{i}]"), out);
            }
        }
        other => {
            let _ = writeln!(out, "{path}: {}", scalar(other));
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}
