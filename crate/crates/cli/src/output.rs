//! Deterministic CSV and JSON artifacts.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

pub const TOOL: &str = "thermopress";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// CSV text with a provenance comment line.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(command: &str, model_sha256: &str, columns: &[&str]) -> Self {
        let mut text = format!("# {TOOL} {VERSION} model-sha256={model_sha256} command={command}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Shortest round-trip decimal; empty for missing values.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// JSON document whose first key is the provenance header.
pub fn json_document(command: &str, model_sha256: &str, body: Value) -> String {
    let header = json!({
        "tool": TOOL,
        "version": VERSION,
        "model_sha256": model_sha256,
        "command": command,
    });
    let mut doc = serde_json::Map::new();
    doc.insert("header".into(), header);
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
    s.push('\n');
    s
}

pub fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
