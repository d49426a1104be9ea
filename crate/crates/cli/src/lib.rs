//! Command-line runner for the `lfu-core` experiments: cached `λ` tables,
//! flat configuration files, and CSV, JSON and gnuplot outputs.

pub mod cache;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod sets;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use error::{CliError, CliResult};

use crate::cache::{load_for, sha256_hex};
use crate::config::{Config, RunSettings, COMMON_KEYS};
use crate::experiments::{find, RunContext};
use crate::manifest::{Manifest, OutputEntry, Status};
use crate::output::write_atomic;

pub const SUMMARY_FILE: &str = "summary.json";

/// Overrides applied on top of the configuration file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub dry_run: bool,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub cache_dir: PathBuf,
}

/// Runs the experiment described by the file at `path`; relative paths in
/// the configuration resolve against its directory.
pub fn run_file(path: &Path, options: &RunOptions) -> CliResult<Manifest> {
    let config = Config::from_file(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_config(&config, base, options)
}

pub fn run_config(config: &Config, base: &Path, options: &RunOptions) -> CliResult<Manifest> {
    let mut settings = RunSettings::from_config(config)?;
    if let Some(w) = options.workers {
        if w == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        settings.workers = w;
    }
    if let Some(out) = &options.out {
        settings.output = out.clone();
    }
    let experiment = find(&settings.experiment)?;
    let allowed: Vec<&str> = COMMON_KEYS.iter().chain(experiment.keys).copied().collect();
    config.check_keys(&allowed)?;
    let job = experiment.prepare(config, base)?;
    std::fs::create_dir_all(&settings.output).map_err(CliError::io(&settings.output))?;

    if options.dry_run {
        let mut manifest = Manifest::begin(&settings.output, experiment.name, config.sha256(), None);
        manifest.finish(Status::DryRun)?;
        return Ok(manifest);
    }

    let needed = job.needed();
    let loaded = if needed > 0 {
        Some(load_for(&options.cache_dir, needed)?)
    } else {
        None
    };
    let mut manifest = Manifest::begin(
        &settings.output,
        experiment.name,
        config.sha256(),
        loaded.as_ref().map(|(_, info)| info.sha256.clone()),
    );
    manifest.write()?;

    let ctx = RunContext {
        table: loaded.as_ref().map(|(t, _)| t),
        workers: settings.workers,
        seed: settings.seed,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", settings.workers)))?;
    let outcome = match pool.install(|| job.run(&ctx)) {
        Ok(o) => o,
        Err(e) => {
            manifest.finish(Status::Failed)?;
            return Err(e);
        }
    };

    let summary = json!({
        "experiment": experiment.name,
        "paper_ref": experiment.paper_ref,
        "config_sha256": config.sha256(),
        "workers_independent": true,
        "results": outcome.results,
    });
    let mut summary_text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    summary_text.push('\n');
    let mut files = outcome.artifacts;
    files.push(experiments::Artifact {
        file: SUMMARY_FILE.to_string(),
        bytes: summary_text.into_bytes(),
    });
    for a in &files {
        write_atomic(&settings.output.join(&a.file), &a.bytes)?;
        manifest.outputs.push(OutputEntry {
            file: a.file.clone(),
            sha256: sha256_hex(&a.bytes),
        });
    }
    manifest.finish(Status::Complete)?;
    Ok(manifest)
}
