//! Experiment configuration files.
//!
//! A config is one JSON object:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "output_dir": "out/rate",
//!   "experiment": { "kind": "case1_rate", "eta": 0.2, "snr_db": [0, 5, 10] }
//! }
//! ```
//!
//! Every experiment parameter has a default, so `{"seed": 1, "experiment":
//! {"kind": "mi_mmse"}}` is a complete config. `seed` is required.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    MiMmse(MiMmseParams),
    Case1Rate(Case1RateParams),
    Case1Roc(Case1RocParams),
    Case1Beampattern(Case1BeampatternParams),
    Case1Aging(Case1AgingParams),
    Case2Convergence(Case2ConvergenceParams),
    Case2Snr(Case2SnrParams),
    Case3Sweep(Case3SweepParams),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::MiMmse(_) => "mi_mmse",
            Experiment::Case1Rate(_) => "case1_rate",
            Experiment::Case1Roc(_) => "case1_roc",
            Experiment::Case1Beampattern(_) => "case1_beampattern",
            Experiment::Case1Aging(_) => "case1_aging",
            Experiment::Case2Convergence(_) => "case2_convergence",
            Experiment::Case2Snr(_) => "case2_snr",
            Experiment::Case3Sweep(_) => "case3_sweep",
        }
    }
}

fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize + 1;
    (0..n).map(|i| start + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Gaussian,
    Bpsk,
    Qpsk,
}

impl InputKind {
    pub fn label(self) -> &'static str {
        match self {
            InputKind::Gaussian => "gaussian",
            InputKind::Bpsk => "bpsk",
            InputKind::Qpsk => "qpsk",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiMmseParams {
    pub snr_db: Vec<f64>,
    pub inputs: Vec<InputKind>,
    pub hermite_order: usize,
}

impl Default for MiMmseParams {
    fn default() -> Self {
        Self {
            snr_db: grid(-10.0, 20.0, 1.0),
            inputs: vec![InputKind::Gaussian, InputKind::Bpsk, InputKind::Qpsk],
            hermite_order: isac_core::metrics::DEFAULT_HERMITE_ORDER,
        }
    }
}

/// Multi-user downlink of the learned-waveform study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub num_antennas: usize,
    pub frame_len: usize,
    /// Transmit power P_T (W); SNR is P_T / σ².
    pub power: f64,
    /// One entry per user.
    pub rician_factors: Vec<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            num_antennas: 8,
            frame_len: 8,
            power: 1.0,
            rician_factors: vec![1.5, 2.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetTraining {
    /// Generated samples, split 60/20/20 into train/validation/test.
    pub samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub patience: Option<usize>,
    /// Symmetry-relabeled copies of each training sample.
    pub augment_copies: usize,
}

impl Default for NetTraining {
    fn default() -> Self {
        Self {
            samples: 2000,
            epochs: 100,
            batch_size: 50,
            lr: 1e-3,
            patience: Some(20),
            augment_copies: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Case1RateParams {
    pub scenario: Scenario,
    pub training: NetTraining,
    pub eta: f64,
    pub snr_db: Vec<f64>,
    /// Held-out channels averaged per SNR point.
    pub eval_channels: usize,
}

impl Default for Case1RateParams {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            training: NetTraining::default(),
            eta: 0.2,
            snr_db: grid(0.0, 20.0, 2.0),
            eval_channels: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocCase {
    pub num_antennas: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Case1RocParams {
    /// `num_antennas` here is ignored; each case sets its own.
    pub scenario: Scenario,
    pub cases: Vec<RocCase>,
    /// Directions the sensing reference illuminates.
    pub targets_deg: Vec<f64>,
    pub target_angle_deg: f64,
    /// Echo SNR |α|²/σ² per antenna and snapshot.
    pub radar_snr_db: f64,
    pub trials: usize,
    pub channels: usize,
    pub num_thresholds: usize,
    pub pfa_report: f64,
}

impl Default for Case1RocParams {
    fn default() -> Self {
        Self {
            scenario: Scenario {
                rician_factors: vec![1.5, 2.7, 1.2, 2.5],
                ..Scenario::default()
            },
            cases: vec![
                RocCase {
                    num_antennas: 8,
                    eta: 0.2,
                },
                RocCase {
                    num_antennas: 8,
                    eta: 0.5,
                },
                RocCase {
                    num_antennas: 16,
                    eta: 0.2,
                },
            ],
            targets_deg: vec![-60.0, 0.0, 60.0],
            target_angle_deg: 0.0,
            radar_snr_db: -20.0,
            trials: 100_000,
            channels: 200,
            num_thresholds: 200,
            pfa_report: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Case1BeampatternParams {
    pub scenario: Scenario,
    pub training: NetTraining,
    pub targets_deg: Vec<f64>,
    pub eta: f64,
    pub eval_channels: usize,
    pub grid_step_deg: f64,
}

impl Default for Case1BeampatternParams {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            training: NetTraining::default(),
            targets_deg: vec![-60.0, 0.0, 60.0],
            eta: 0.2,
            eval_channels: 200,
            grid_step_deg: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Case1AgingParams {
    pub scenario: Scenario,
    pub training: NetTraining,
    pub eta: f64,
    pub snr_db: Vec<f64>,
    pub eval_channels: usize,
    pub user_speed: f64,
    pub carrier_freq: f64,
    pub sample_period: f64,
    /// Rician factors of the larger system the small-system model is
    /// deployed in; must list more users than `scenario`.
    pub topology_rician_factors: Vec<f64>,
}

impl Default for Case1AgingParams {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            training: NetTraining::default(),
            eta: 0.2,
            snr_db: grid(0.0, 12.0, 2.0),
            eval_channels: 200,
            user_speed: 2.0,
            carrier_freq: 3.2e9,
            sample_period: 1e-3,
            topology_rician_factors: vec![1.5, 2.7, 1.2, 2.5],
        }
    }
}

/// Hybrid beamforming system and step-size training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSetup {
    pub num_antennas: usize,
    pub rf_chains: usize,
    pub num_users: usize,
    pub layers: usize,
    pub train_channels: usize,
    pub validation_channels: usize,
    pub test_channels: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub fixed_step: f64,
    pub max_grad_norm: Option<f64>,
}

impl Default for HybridSetup {
    fn default() -> Self {
        Self {
            num_antennas: 16,
            rf_chains: 6,
            num_users: 4,
            layers: 10,
            train_channels: 1000,
            validation_channels: 100,
            test_channels: 100,
            epochs: 10,
            batch_size: 100,
            lr: 0.005,
            fixed_step: 0.05,
            max_grad_norm: Some(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Case2ConvergenceParams {
    pub setup: HybridSetup,
    pub snr_db: f64,
    /// Layers of fixed-step PGA traced for the comparison curve.
    pub fixed_horizon: usize,
    /// Relative tolerance defining the plateau.
    pub plateau_tol: f64,
}

impl Default for Case2ConvergenceParams {
    fn default() -> Self {
        Self {
            setup: HybridSetup::default(),
            snr_db: 10.0,
            fixed_horizon: 200,
            plateau_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Case2SnrParams {
    pub setup: HybridSetup,
    pub snr_db: Vec<f64>,
}

impl Default for Case2SnrParams {
    fn default() -> Self {
        Self {
            setup: HybridSetup::default(),
            snr_db: vec![-5.0, 0.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationParams {
    pub ser: f64,
    pub pd: f64,
    pub pfa: f64,
    pub trials: usize,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self {
            ser: 10f64.powf(-0.49),
            pd: 0.935,
            pfa: 0.0085,
            trials: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Softmax,
    PerBit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Case3SweepParams {
    pub bits: usize,
    pub etas: Vec<f64>,
    /// Independent training runs averaged per η.
    pub runs: usize,
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub comm_head: HeadKind,
    pub calibration: CalibrationParams,
    pub eval_trials: usize,
}

impl Default for Case3SweepParams {
    fn default() -> Self {
        Self {
            bits: 5,
            etas: vec![0.05, 0.7, 0.9],
            runs: 3,
            epochs: 50,
            samples_per_epoch: 100_000,
            batch_size: 1000,
            lr: 1e-3,
            comm_head: HeadKind::Softmax,
            calibration: CalibrationParams::default(),
            eval_trials: 100_000,
        }
    }
}

/// One problem found by [`validate`], located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Parses a config; syntax and schema errors carry line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text).map_err(|e| {
        // the location is reported separately
        let mut message = e.to_string();
        if let Some(at) = message.rfind(" at line ") {
            message.truncate(at);
        }
        CliError::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    })
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

struct Checker {
    out: Vec<Diagnostic>,
}

impl Checker {
    fn fail(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.out.push(Diagnostic {
            field: field.into(),
            message: message.into(),
        });
    }

    fn eta(&mut self, field: &str, eta: f64) {
        if !(0.0..=1.0).contains(&eta) {
            self.fail(field, format!("{eta} is out of range [0, 1]"));
        }
    }

    fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.fail(field, format!("{v} must be positive and finite"));
        }
    }

    fn at_least(&mut self, field: &str, v: usize, min: usize) {
        if v < min {
            self.fail(field, format!("{v} must be at least {min}"));
        }
    }

    fn probability(&mut self, field: &str, p: f64) {
        if !(p > 0.0 && p < 1.0) {
            self.fail(field, format!("{p} is out of range (0, 1)"));
        }
    }

    fn snr_grid(&mut self, field: &str, grid: &[f64]) {
        if grid.is_empty() {
            self.fail(field, "must list at least one SNR");
        }
        if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
            self.fail(field, format!("{v} is not finite"));
        }
    }

    fn scenario(&mut self, field: &str, s: &Scenario) {
        self.at_least(&format!("{field}.num_antennas"), s.num_antennas, 1);
        self.at_least(&format!("{field}.frame_len"), s.frame_len, 1);
        self.positive(&format!("{field}.power"), s.power);
        if s.rician_factors.is_empty() {
            self.fail(
                format!("{field}.rician_factors"),
                "must list at least one user",
            );
        }
        if let Some(k) = s
            .rician_factors
            .iter()
            .find(|k| !(**k >= 0.0 && k.is_finite()))
        {
            self.fail(
                format!("{field}.rician_factors"),
                format!("{k} must be nonnegative"),
            );
        }
    }

    fn training(&mut self, field: &str, t: &NetTraining) {
        self.at_least(&format!("{field}.epochs"), t.epochs, 1);
        self.at_least(&format!("{field}.batch_size"), t.batch_size, 1);
        self.positive(&format!("{field}.lr"), t.lr);
        // 60% of the samples must fill at least one batch
        if t.samples * 3 / 5 < t.batch_size.max(1) {
            self.fail(
                format!("{field}.samples"),
                format!("{} samples leave fewer than one training batch", t.samples),
            );
        }
    }

    fn held_out(&mut self, field: &str, eval: usize, training: &NetTraining) {
        self.at_least(field, eval, 1);
        let test = training.samples - split_train_val(training.samples);
        if eval > test {
            self.fail(field, format!("{eval} exceeds the {test} held-out samples"));
        }
    }

    fn hybrid(&mut self, field: &str, s: &HybridSetup) {
        self.at_least(&format!("{field}.num_antennas"), s.num_antennas, 1);
        self.at_least(&format!("{field}.rf_chains"), s.rf_chains, 1);
        self.at_least(&format!("{field}.num_users"), s.num_users, 1);
        self.at_least(&format!("{field}.layers"), s.layers, 1);
        self.at_least(&format!("{field}.train_channels"), s.train_channels, 1);
        self.at_least(
            &format!("{field}.validation_channels"),
            s.validation_channels,
            1,
        );
        self.at_least(&format!("{field}.test_channels"), s.test_channels, 1);
        self.at_least(&format!("{field}.epochs"), s.epochs, 1);
        self.at_least(&format!("{field}.batch_size"), s.batch_size, 1);
        self.positive(&format!("{field}.lr"), s.lr);
        if !(s.fixed_step >= 0.0 && s.fixed_step.is_finite()) {
            self.fail(format!("{field}.fixed_step"), "must be nonnegative");
        }
        if let Some(g) = s.max_grad_norm {
            self.positive(&format!("{field}.max_grad_norm"), g);
        }
    }
}

fn split_train_val(count: usize) -> usize {
    let split = isac_core::waveform_learn::split_dataset(count, 0);
    split.train.len() + split.validation.len()
}

/// Range and consistency checks that the schema cannot express. An empty
/// result means the config is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut c = Checker { out: Vec::new() };
    match &config.experiment {
        Experiment::MiMmse(p) => {
            c.snr_grid("experiment.snr_db", &p.snr_db);
            if p.inputs.is_empty() {
                c.fail("experiment.inputs", "must list at least one input");
            }
            c.at_least("experiment.hermite_order", p.hermite_order, 1);
        }
        Experiment::Case1Rate(p) => {
            c.scenario("experiment.scenario", &p.scenario);
            c.training("experiment.training", &p.training);
            c.eta("experiment.eta", p.eta);
            c.snr_grid("experiment.snr_db", &p.snr_db);
            c.held_out("experiment.eval_channels", p.eval_channels, &p.training);
        }
        Experiment::Case1Roc(p) => {
            c.scenario("experiment.scenario", &p.scenario);
            if p.cases.is_empty() {
                c.fail("experiment.cases", "must list at least one case");
            }
            for (i, case) in p.cases.iter().enumerate() {
                c.at_least(
                    &format!("experiment.cases[{i}].num_antennas"),
                    case.num_antennas,
                    1,
                );
                c.eta(&format!("experiment.cases[{i}].eta"), case.eta);
            }
            if p.targets_deg.is_empty() {
                c.fail("experiment.targets_deg", "must list at least one direction");
            }
            if !(p.target_angle_deg.abs() <= 90.0) {
                c.fail("experiment.target_angle_deg", "must lie in [-90, 90]");
            }
            if !p.radar_snr_db.is_finite() {
                c.fail("experiment.radar_snr_db", "must be finite");
            }
            c.at_least("experiment.trials", p.trials, 1);
            c.at_least("experiment.channels", p.channels, 1);
            c.at_least("experiment.num_thresholds", p.num_thresholds, 2);
            c.probability("experiment.pfa_report", p.pfa_report);
        }
        Experiment::Case1Beampattern(p) => {
            c.scenario("experiment.scenario", &p.scenario);
            c.training("experiment.training", &p.training);
            c.eta("experiment.eta", p.eta);
            if p.targets_deg.is_empty() {
                c.fail("experiment.targets_deg", "must list at least one direction");
            }
            c.held_out("experiment.eval_channels", p.eval_channels, &p.training);
            c.positive("experiment.grid_step_deg", p.grid_step_deg);
        }
        Experiment::Case1Aging(p) => {
            c.scenario("experiment.scenario", &p.scenario);
            c.training("experiment.training", &p.training);
            c.eta("experiment.eta", p.eta);
            c.snr_grid("experiment.snr_db", &p.snr_db);
            c.held_out("experiment.eval_channels", p.eval_channels, &p.training);
            if !(p.user_speed >= 0.0 && p.user_speed.is_finite()) {
                c.fail("experiment.user_speed", "must be nonnegative");
            }
            c.positive("experiment.carrier_freq", p.carrier_freq);
            c.positive("experiment.sample_period", p.sample_period);
            if p.topology_rician_factors.len() <= p.scenario.rician_factors.len() {
                c.fail(
                    "experiment.topology_rician_factors",
                    "must list more users than scenario.rician_factors",
                );
            }
        }
        Experiment::Case2Convergence(p) => {
            c.hybrid("experiment.setup", &p.setup);
            if !p.snr_db.is_finite() {
                c.fail("experiment.snr_db", "must be finite");
            }
            c.at_least(
                "experiment.fixed_horizon",
                p.fixed_horizon,
                p.setup.layers.max(1),
            );
            c.positive("experiment.plateau_tol", p.plateau_tol);
        }
        Experiment::Case2Snr(p) => {
            c.hybrid("experiment.setup", &p.setup);
            c.snr_grid("experiment.snr_db", &p.snr_db);
        }
        Experiment::Case3Sweep(p) => {
            if !(1..=isac_core::constellation_ae::MAX_BITS).contains(&p.bits) {
                c.fail(
                    "experiment.bits",
                    format!(
                        "{} is out of range [1, {}]",
                        p.bits,
                        isac_core::constellation_ae::MAX_BITS
                    ),
                );
            }
            if p.etas.is_empty() {
                c.fail("experiment.etas", "must list at least one weight");
            }
            for (i, &eta) in p.etas.iter().enumerate() {
                c.eta(&format!("experiment.etas[{i}]"), eta);
            }
            c.at_least("experiment.runs", p.runs, 1);
            c.at_least("experiment.epochs", p.epochs, 1);
            c.at_least("experiment.batch_size", p.batch_size, 1);
            if p.samples_per_epoch < p.batch_size {
                c.fail("experiment.samples_per_epoch", "must be at least one batch");
            }
            c.positive("experiment.lr", p.lr);
            c.probability("experiment.calibration.ser", p.calibration.ser);
            c.probability("experiment.calibration.pd", p.calibration.pd);
            c.probability("experiment.calibration.pfa", p.calibration.pfa);
            c.at_least("experiment.calibration.trials", p.calibration.trials, 1);
            c.at_least("experiment.eval_trials", p.eval_trials, 1);
        }
    }
    c.out
}
