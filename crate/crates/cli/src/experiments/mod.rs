//! One function per experiment kind. Each writes its CSVs through
//! [`Outputs`] and returns the scalar summary stored in the run record.

mod case1;
mod case2;
mod case3;
mod mi_mmse;

use std::collections::BTreeMap;

use rand::RngCore;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::Outputs;
use crate::CliError;

pub type Summary = BTreeMap<String, f64>;

pub fn dispatch(config: &ExperimentConfig, out: &mut Outputs) -> Result<Summary, CliError> {
    let seed = config.seed;
    match &config.experiment {
        Experiment::MiMmse(p) => mi_mmse::run(p, out),
        Experiment::Case1Rate(p) => case1::rate(p, seed, out),
        Experiment::Case1Roc(p) => case1::roc(p, seed, out),
        Experiment::Case1Beampattern(p) => case1::beampattern(p, seed, out),
        Experiment::Case1Aging(p) => case1::aging(p, seed, out),
        Experiment::Case2Convergence(p) => case2::convergence(p, seed, out),
        Experiment::Case2Snr(p) => case2::snr_sweep(p, seed, out),
        Experiment::Case3Sweep(p) => case3::sweep(p, seed, out),
    }
}

/// Independent seed for one named stream of an experiment.
fn stream(seed: u64, index: u64) -> u64 {
    isac_core::linalg::child_rng(seed, index).next_u64()
}

/// Shortest decimal form of a parameter, for summary keys and labels.
fn tag(v: f64) -> String {
    format!("{v}")
}
