//! Reproducible output: run manifests, lossless CSV, JSON.
//!
//! Every JSON document embeds a [`RunManifest`]; CSV files carry the same
//! manifest as a single `#`-prefixed comment line. Floats are printed with 17
//! significant digits so doubles round-trip losslessly, and all maps are
//! ordered, so identical invocations produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

/// Provenance of one invocation, embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub beyond_theory: bool,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            tolerances: BTreeMap::new(),
            seed: None,
            beyond_theory: false,
        }
    }

    pub fn param(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }
}

/// 17 significant digits: lossless round-trip for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Destination for the rendered output.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out }
    }

    pub fn write(&self, content: &str) -> std::io::Result<()> {
        match &self.out {
            Some(path) => fs::write(path, content),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(content.as_bytes())
            }
        }
    }
}

/// Render a CSV document: manifest comment, header, then rows (LF endings).
pub fn render_csv(manifest: &RunManifest, header: &str, rows: &[Vec<String>]) -> String {
    let mut doc = String::new();
    doc.push_str("# manifest: ");
    doc.push_str(&serde_json::to_string(manifest).expect("manifest serializes"));
    doc.push('\n');
    doc.push_str(header);
    doc.push('\n');
    for row in rows {
        doc.push_str(&row.join(","));
        doc.push('\n');
    }
    doc
}

/// Render a JSON document with the manifest embedded under `manifest`.
pub fn render_json(manifest: &RunManifest, body: serde_json::Value) -> String {
    let mut root = serde_json::Map::new();
    root.insert(
        "manifest".to_string(),
        serde_json::to_value(manifest).expect("manifest serializes"),
    );
    if let serde_json::Value::Object(map) = body {
        for (k, v) in map {
            root.insert(k, v);
        }
    }
    let mut doc =
        serde_json::to_string_pretty(&serde_json::Value::Object(root)).expect("body serializes");
    doc.push('\n');
    doc
}

/// JSON number from f64 (finite; NaN/∞ become null).
pub fn json_f64(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}
