//! Output files with embedded provenance.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::svg::Plot;
use crate::CliError;

/// Config hash and master seed stamped into every output.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub input_sha256: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Provenance {
    /// Hash of the resolved configuration together with the input bytes.
    pub fn new(cfg: &RunConfig, input: Option<&[u8]>) -> Self {
        let input_sha256 = input.map(sha256_hex);
        let canonical = serde_json::to_vec(&json!({ "config": cfg, "input_sha256": input_sha256 })).expect("config serialises");
        Self { config_hash: sha256_hex(&canonical), seed: cfg.seed, input_sha256 }
    }

    pub fn comments(&self) -> Vec<String> {
        vec![format!("config_hash={}", self.config_hash), format!("seed={}", self.seed)]
    }

    pub fn svg_comment(&self) -> String {
        format!("config_hash={} seed={}", self.config_hash, self.seed)
    }

    /// `body` with the provenance fields in front.
    pub fn stamp<T: Serialize>(&self, body: &T) -> Value {
        let mut out = serde_json::Map::new();
        out.insert("config_hash".into(), json!(self.config_hash));
        out.insert("seed".into(), json!(self.seed));
        out.insert("input_sha256".into(), json!(self.input_sha256));
        match serde_json::to_value(body).expect("output serialises") {
            Value::Object(map) => out.extend(map),
            other => {
                out.insert("data".into(), other);
            }
        }
        Value::Object(out)
    }
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, prov: &Provenance, body: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&prov.stamp(body)).expect("output serialises");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_svg(path: &Path, prov: &Provenance, plot: Plot) -> Result<(), CliError> {
    write_bytes(path, plot.comment(&prov.svg_comment()).render().as_bytes())
}

/// Writes through a closure that fills an in-memory buffer.
pub fn write_with<F>(path: &Path, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> spectral_kinetics::Result<()>,
{
    let mut buf = Vec::new();
    fill(&mut buf)?;
    write_bytes(path, &buf)
}

pub fn beta_dir(out: &Path, beta: f64) -> PathBuf {
    out.join(format!("beta_{beta}"))
}

pub fn cell_dir(out: &Path, beta: f64, ratio: f64) -> PathBuf {
    beta_dir(out, beta).join(format!("T_{ratio}"))
}
