//! Provenance stamped on every output file and the writers that apply it.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub git: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &str, config_text: &str, seed: u64) -> Self {
        Self {
            tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            command: command.to_string(),
            git: git_describe().to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed,
        }
    }

    /// One `<prefix> key: value` line per field.
    pub fn comment_block(&self, prefix: &str, suffix: &str) -> String {
        [
            ("tool", self.tool.as_str()),
            ("command", self.command.as_str()),
            ("git", self.git.as_str()),
            ("config-sha256", self.config_sha256.as_str()),
            ("seed", &self.seed.to_string()),
        ]
        .iter()
        .map(|(k, v)| format!("{prefix}{k}: {v}{suffix}\n"))
        .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `git describe --always --dirty` of the source tree, or "unknown".
pub fn git_describe() -> &'static str {
    static DESCRIBE: OnceLock<String> = OnceLock::new();
    DESCRIBE.get_or_init(|| {
        Command::new("git")
            .args(["-C", env!("CARGO_MANIFEST_DIR"), "describe", "--always", "--dirty"])
            .output()
            .ok()
            .filter(|o| o.status.success())
            .and_then(|o| String::from_utf8(o.stdout).ok())
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "unknown".into())
    })
}

/// Full-precision float: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";")
}

/// CSV with the provenance as leading `#` comment lines.
pub fn write_csv(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let body = w.into_inner().map_err(|e| LabError::io(path, e.into_error()))?;
    let mut text = prov.comment_block("# ", "");
    text.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// Pretty JSON object with a `provenance` member in front of `body`'s fields.
pub fn write_json<T: Serialize>(path: &Path, prov: &Provenance, body: &T) -> Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("provenance".into(), serde_json::to_value(prov)?);
    match serde_json::to_value(body)? {
        serde_json::Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("data".into(), other);
        }
    }
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// SVG preceded by the provenance as an XML comment.
pub fn write_svg(path: &Path, prov: &Provenance, svg: &str) -> Result<()> {
    let text = format!("<!--\n{}-->\n{svg}", prov.comment_block("  ", ""));
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}
