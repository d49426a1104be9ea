//! `manifest.json`: written before any result, rewritten when the run ends.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliResult;
use crate::output::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Running,
    Complete,
    Failed,
    DryRun,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Complete => "complete",
            Status::Failed => "failed",
            Status::DryRun => "dry-run",
        }
    }
}

/// One output file and its digest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub path: PathBuf,
    pub experiment: String,
    pub config_sha256: String,
    pub cache_sha256: Option<String>,
    pub started: String,
    pub finished: Option<String>,
    pub status: Status,
    pub outputs: Vec<OutputEntry>,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Manifest {
    pub fn begin(
        dir: &Path,
        experiment: &str,
        config_sha256: String,
        cache_sha256: Option<String>,
    ) -> Self {
        Self {
            path: dir.join(MANIFEST_FILE),
            experiment: experiment.to_string(),
            config_sha256,
            cache_sha256,
            started: timestamp(),
            finished: None,
            status: Status::Running,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "version": VERSION,
            "experiment": self.experiment,
            "config_sha256": self.config_sha256,
            "cache_sha256": self.cache_sha256,
            "started": self.started,
            "finished": self.finished,
            "status": self.status.name(),
            "outputs": self.outputs.iter().map(|o| json!({"file": o.file, "sha256": o.sha256})).collect::<Vec<_>>(),
        })
    }

    pub fn write(&self) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json()).expect("manifest serializes");
        text.push('\n');
        write_atomic(&self.path, text.as_bytes())
    }

    pub fn finish(&mut self, status: Status) -> CliResult<()> {
        self.status = status;
        self.finished = Some(timestamp());
        self.write()
    }
}
