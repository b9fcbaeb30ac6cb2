//! Seeded experiment runner for `isac-core`.
//!
//! [`config`] describes the JSON config files, [`experiments`] runs them and
//! [`output`] writes the CSV artifacts and the [`RunRecord`] manifest.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::{parse_config, validate, Diagnostic, ExperimentConfig};
pub use output::RunRecord;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),

    #[error(transparent)]
    Core(#[from] isac_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn output_dir(config: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(config.experiment.name()))
}

/// Validates and runs one experiment, then writes its manifest last.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord, CliError> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let diagnostics = validate(&config);
    if !diagnostics.is_empty() {
        return Err(CliError::Invalid(diagnostics));
    }
    let dir = output_dir(&config, opts);
    let started = Instant::now();
    let mut out = output::Outputs::create(&dir)?;
    log::info!(
        "running {} (seed {}) into {}",
        config.experiment.name(),
        config.seed,
        dir.display()
    );
    let summary = experiments::dispatch(&config, &mut out)?;
    let record = RunRecord {
        config,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        files: out.files().to_vec(),
        summary,
    };
    record.write(&dir)?;
    Ok(record)
}
