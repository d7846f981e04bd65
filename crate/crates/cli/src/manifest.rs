//! The per-run manifest. It is written for every run, failed or not.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::scenarios::Check;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    ConfigError,
    RuntimeError,
    InvariantFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    /// Data rows, excluding `#` header lines.
    pub rows: usize,
    pub bytes: usize,
}

impl FileEntry {
    pub fn describe(name: &str, text: &str) -> Self {
        FileEntry { name: name.to_string(), rows: text.lines().filter(|l| !l.starts_with('#')).count(), bytes: text.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub subquantum_lab: &'static str,
    pub manifest_format: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub status: Status,
    pub exit_code: i32,
    pub error: Option<String>,
    pub seed: u64,
    /// The resolved parameters the run used.
    pub config: Value,
    pub versions: Versions,
    pub wall_time_seconds: f64,
    pub invariants: Vec<Check>,
    pub metrics: Map<String, Value>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, config: Value) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            status: Status::Ok,
            exit_code: 0,
            error: None,
            seed,
            config,
            versions: Versions { subquantum_lab: env!("CARGO_PKG_VERSION"), manifest_format: 1 },
            wall_time_seconds: 0.0,
            invariants: Vec::new(),
            metrics: Map::new(),
            files: Vec::new(),
        }
    }

    /// Records a failure and returns its exit code.
    pub fn fail(&mut self, status: Status, error: String, code: i32) -> i32 {
        self.status = status;
        self.error = Some(error);
        self.exit_code = code;
        code
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text)
    }
}
