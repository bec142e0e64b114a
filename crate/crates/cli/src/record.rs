//! Run records: inputs, effective configuration and results under a content hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ToolConfig;
use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    /// File name without directories, so moved inputs hash the same.
    pub name: String,
    pub sha256: String,
}

impl InputFile {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(CliError::io(path))?;
        Ok(Self {
            name: path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub record_id: String,
    /// Excluded from `record_id`.
    pub created_at: String,
    pub tool_version: String,
    pub subcommand: String,
    pub inputs: Vec<InputFile>,
    pub config_snapshot: ToolConfig,
    pub results: Value,
}

impl RunRecord {
    pub fn new(subcommand: &str, inputs: Vec<InputFile>, config: &ToolConfig, results: Value) -> Self {
        let mut record = Self {
            record_id: String::new(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            tool_version: TOOL_VERSION.to_string(),
            subcommand: subcommand.to_string(),
            inputs,
            config_snapshot: config.clone(),
            results,
        };
        record.record_id = record.content_hash();
        record
    }

    /// SHA-256 of the key-sorted compact JSON of every field except
    /// `record_id` and `created_at`.
    pub fn content_hash(&self) -> String {
        let body = json!({
            "tool_version": self.tool_version,
            "subcommand": self.subcommand,
            "inputs": self.inputs,
            "config_snapshot": self.config_snapshot,
            "results": self.results,
        });
        sha256_hex(serde_json::to_string(&body).expect("record serializes").as_bytes())
    }

    pub fn verify(&self, source: &str) -> Result<(), CliError> {
        let computed = self.content_hash();
        if computed != self.record_id {
            return Err(CliError::Tampered {
                path: source.to_string(),
                stored: self.record_id.clone(),
                computed,
            });
        }
        Ok(())
    }
}

pub fn write_run_record(record: &RunRecord, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(record).expect("record serializes");
    std::fs::write(path, text + "\n").map_err(CliError::io(path))
}

/// Loads a record and checks its id against the recomputed hash.
pub fn load_run_record(path: &Path) -> Result<RunRecord, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let record: RunRecord = serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    record.verify(&path.display().to_string())?;
    Ok(record)
}
