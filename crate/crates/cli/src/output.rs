use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MI_MMSE_HEADER: [&str; 4] = ["snr_db", "input", "mi_nats", "mmse"];
pub const RATE_HEADER: [&str; 3] = ["snr_db", "method", "sum_rate_bits"];
pub const BEAMPATTERN_HEADER: [&str; 3] = ["angle_rad", "method", "gain"];
pub const ROC_HEADER: [&str; 4] = ["threshold", "pfa", "pd", "method"];
pub const CONSTELLATION_HEADER: [&str; 3] = ["label", "re", "im"];
pub const CONVERGENCE_HEADER: [&str; 3] = ["layer", "method", "rate_nats"];
pub const METRICS_HEADER: [&str; 7] = [
    "method",
    "eta",
    "run",
    "ser",
    "pd",
    "pfa",
    "amplitude_spread",
];

pub const RECORD_FILE: &str = "run_record.json";

/// Fixed 9-significant-digit scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.8e}")
}

/// Output directory that remembers every file written to it.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Manifest of one run. Written after every other output, so its presence
/// marks a complete run directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, f64>,
}

impl RunRecord {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)?;
        // write-then-rename keeps a half-written record from looking complete
        let tmp = dir.join(format!("{RECORD_FILE}.tmp"));
        fs::write(&tmp, text + "\n")?;
        fs::rename(tmp, dir.join(RECORD_FILE))?;
        Ok(())
    }
}
