//! Hybrid analog/digital beamforming by projected gradient ascent, and the
//! unrolled variant whose per-layer step sizes are learned.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    child_rng, complex_gaussian, complex_gaussian_matrix, require_positive, CMat, CVec,
};
use crate::metrics::hybrid_sum_rate;

/// Analog precoder `F` (N×L, unit modulus) and digital precoder `W` (L×K).
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformer {
    pub f: CMat,
    pub w: CMat,
    pub power: f64,
}

impl HybridBeamformer {
    /// Uniform random phases for `F`; Gaussian `W` scaled to `‖FW‖² = P_t`.
    pub fn random<R: Rng + ?Sized>(
        antennas: usize,
        chains: usize,
        users: usize,
        power: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if antennas == 0 || chains == 0 || users == 0 {
            return Err(Error::invalid("dimensions", "N, L and K must be positive"));
        }
        let f = CMat::from_fn(antennas, chains, |_, _| {
            Complex64::from_polar(
                1.0,
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
        });
        let w = complex_gaussian_matrix(chains, users, rng);
        let w = normalize_power(&f, &w, power)?;
        Ok(Self { f, w, power })
    }

    pub fn sum_rate(&self, channels: &[CVec], noise_var: f64) -> Result<f64> {
        hybrid_sum_rate(channels, &self.f, &self.w, noise_var)
    }
}

/// Per-layer step sizes: row i holds `(μ_F, μ_W)` for layer i.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub steps: DMatrix<f64>,
}

impl StepSchedule {
    pub fn new(steps: DMatrix<f64>) -> Result<Self> {
        if steps.nrows() == 0 || steps.ncols() != 2 {
            return Err(Error::shape(
                "step schedule",
                "I×2 with I ≥ 1",
                format!("{}x{}", steps.nrows(), steps.ncols()),
            ));
        }
        if steps.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("step schedule", "non-finite step size"));
        }
        Ok(Self { steps })
    }

    pub fn constant(layers: usize, step: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(layers, 2, step))
    }

    pub fn layers(&self) -> usize {
        self.steps.nrows()
    }

    pub fn mu_f(&self, layer: usize) -> f64 {
        self.steps[(layer, 0)]
    }

    pub fn mu_w(&self, layer: usize) -> f64 {
        self.steps[(layer, 1)]
    }
}

struct UserTerms {
    /// `tr(Z H̃_k) + σ²`, the total received power plus noise.
    total: f64,
    /// `tr(Z_k̄ H̃_k) + σ²`, interference plus noise.
    interference: f64,
}

fn user_terms(h: &CVec, fw: &CMat, k: usize, noise_var: f64) -> UserTerms {
    let powers: Vec<f64> = fw.column_iter().map(|c| h.dotc(&c).norm_sqr()).collect();
    let all: f64 = powers.iter().sum();
    UserTerms {
        total: all + noise_var,
        interference: all - powers[k] + noise_var,
    }
}

fn check_dims(channels: &[CVec], f: &CMat, w: &CMat, noise_var: f64) -> Result<()> {
    require_positive("noise_var", noise_var)?;
    if channels.is_empty() {
        return Err(Error::NoUsers);
    }
    if channels.len() != w.ncols() {
        return Err(Error::shape(
            "digital precoder users",
            channels.len(),
            w.ncols(),
        ));
    }
    if f.ncols() != w.nrows() {
        return Err(Error::shape("RF chains", f.ncols(), w.nrows()));
    }
    if let Some(h) = channels.iter().find(|h| h.len() != f.nrows()) {
        return Err(Error::shape("channel length", f.nrows(), h.len()));
    }
    Ok(())
}

/// `(1/ln 2) Σ_k [H̃_k F V / (tr(Z H̃_k) + σ²) − H̃_k F V_k̄ / (tr(Z_k̄ H̃_k) + σ²)]`.
///
/// Every term is rank one (`H̃_k = h_k h_kᴴ`), so it is evaluated as
/// `h_k (h_kᴴ F W) Wᴴ` without forming N×N matrices.
pub fn grad_f(channels: &[CVec], f: &CMat, w: &CMat, noise_var: f64) -> Result<CMat> {
    check_dims(channels, f, w, noise_var)?;
    let fw = f * w;
    let mut grad = CMat::zeros(f.nrows(), f.ncols());
    for (k, h) in channels.iter().enumerate() {
        let t = user_terms(h, &fw, k, noise_var);
        // row vector h_kᴴ F W
        let gains = h.adjoint() * &fw;
        let mut masked = gains.clone();
        masked[k] = Complex64::new(0.0, 0.0);
        let row =
            gains / Complex64::new(t.total, 0.0) - masked / Complex64::new(t.interference, 0.0);
        grad += h * (row * w.adjoint());
    }
    Ok(grad / Complex64::new(LN_2, 0.0))
}

/// `(1/ln 2) Σ_k [H̄_k W / (tr(V H̄_k) + σ²) − H̄_k W_k̄ / (tr(V_k̄ H̄_k) + σ²)]`
/// with `H̄_k = Fᴴ h_k h_kᴴ F`.
pub fn grad_w(channels: &[CVec], f: &CMat, w: &CMat, noise_var: f64) -> Result<CMat> {
    check_dims(channels, f, w, noise_var)?;
    let fw = f * w;
    let mut grad = CMat::zeros(w.nrows(), w.ncols());
    for (k, h) in channels.iter().enumerate() {
        let t = user_terms(h, &fw, k, noise_var);
        let g = f.adjoint() * h;
        let gains = g.adjoint() * w;
        let mut masked = gains.clone();
        masked[k] = Complex64::new(0.0, 0.0);
        let row =
            gains / Complex64::new(t.total, 0.0) - masked / Complex64::new(t.interference, 0.0);
        grad += g * row;
    }
    Ok(grad / Complex64::new(LN_2, 0.0))
}

/// Entrywise projection onto the unit circle; a zero entry maps to `1`.
pub fn project_unit_modulus(f: &CMat) -> CMat {
    f.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            z / r
        }
    })
}

/// `√P_t W / ‖F W‖_F`.
pub fn normalize_power(f: &CMat, w: &CMat, power: f64) -> Result<CMat> {
    require_positive("power", power)?;
    let norm = (f * w).norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateBeamformer);
    }
    Ok(w * Complex64::new(power.sqrt() / norm, 0.0))
}

/// Runs one PGA layer per schedule row (F step and projection, then W step
/// and normalization) and records the sum rate in nats after each layer.
pub fn pga_run(
    channels: &[CVec],
    init: &HybridBeamformer,
    schedule: &StepSchedule,
    noise_var: f64,
) -> Result<(HybridBeamformer, Vec<f64>)> {
    let mut f = init.f.clone();
    let mut w = init.w.clone();
    let mut rates = Vec::with_capacity(schedule.layers());
    for i in 0..schedule.layers() {
        let gf = grad_f(channels, &f, &w, noise_var)?;
        f = project_unit_modulus(&(f + gf * Complex64::new(schedule.mu_f(i), 0.0)));
        let gw = grad_w(channels, &f, &w, noise_var)?;
        w = normalize_power(
            &f,
            &(w + gw * Complex64::new(schedule.mu_w(i), 0.0)),
            init.power,
        )?;
        rates.push(hybrid_sum_rate(channels, &f, &w, noise_var)?);
    }
    Ok((
        HybridBeamformer {
            f,
            w,
            power: init.power,
        },
        rates,
    ))
}

/// One channel realization with the starting point every run uses for it.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSample {
    pub channels: Vec<CVec>,
    pub init: HybridBeamformer,
}

/// i.i.d. `CN(0, 1)` channels and a seeded random start for each sample.
pub fn generate_hybrid_dataset(
    antennas: usize,
    chains: usize,
    users: usize,
    power: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<HybridSample>> {
    (0..count)
        .map(|i| {
            let mut rng = child_rng(seed, i as u64);
            let channels = (0..users)
                .map(|_| CVec::from_fn(antennas, |_, _| complex_gaussian(&mut rng)))
                .collect();
            let init = HybridBeamformer::random(antennas, chains, users, power, &mut rng)?;
            Ok(HybridSample { channels, init })
        })
        .collect()
}

/// Weight given to the rate of layer i (1-based) in the unrolled loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LayerWeight {
    /// `ln(1 + i)`
    #[default]
    NaturalLog,
    /// `log2(1 + i)`
    Log2,
    Uniform,
}

impl LayerWeight {
    pub fn weight(self, layer: usize) -> f64 {
        let x = 1.0 + layer as f64;
        match self {
            LayerWeight::NaturalLog => x.ln(),
            LayerWeight::Log2 => x.log2(),
            LayerWeight::Uniform => 1.0,
        }
    }
}

/// `−(1/|D|) Σ_d (1/I) Σ_i w(i) R_d^{(i)}`.
pub fn unrolled_loss(
    schedule: &StepSchedule,
    dataset: &[HybridSample],
    noise_var: f64,
    weighting: LayerWeight,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let layers = schedule.layers() as f64;
    let per_sample = dataset
        .par_iter()
        .map(|s| {
            let (_, rates) = pga_run(&s.channels, &s.init, schedule, noise_var)?;
            Ok(rates
                .iter()
                .enumerate()
                .map(|(i, r)| weighting.weight(i + 1) * r)
                .sum::<f64>()
                / layers)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(-per_sample.iter().sum::<f64>() / dataset.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTrainConfig {
    pub layers: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub init_step: f64,
    /// Central-difference half width for the step-size gradient.
    pub fd_step: f64,
    pub weighting: LayerWeight,
    /// Rescales the step-size gradient to at most this norm. The rate is
    /// steep in the step sizes near the stability edge, and unclipped SGD
    /// steps there overshoot by an order of magnitude.
    pub max_grad_norm: Option<f64>,
    pub seed: u64,
}

impl Default for StepTrainConfig {
    fn default() -> Self {
        Self {
            layers: 10,
            lr: 0.005,
            epochs: 20,
            batch_size: 100,
            init_step: 0.05,
            fd_step: 1e-5,
            weighting: LayerWeight::NaturalLog,
            max_grad_norm: Some(1.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
}

fn schedule_gradient(
    schedule: &StepSchedule,
    batch: &[HybridSample],
    noise_var: f64,
    config: &StepTrainConfig,
) -> Result<DMatrix<f64>> {
    let mut grad = DMatrix::zeros(schedule.layers(), 2);
    for i in 0..schedule.layers() {
        for j in 0..2 {
            let mut up = schedule.clone();
            up.steps[(i, j)] += config.fd_step;
            let mut down = schedule.clone();
            down.steps[(i, j)] -= config.fd_step;
            grad[(i, j)] = (unrolled_loss(&up, batch, noise_var, config.weighting)?
                - unrolled_loss(&down, batch, noise_var, config.weighting)?)
                / (2.0 * config.fd_step);
        }
    }
    Ok(grad)
}

/// Minibatch SGD on the unrolled loss over the 2I step sizes, starting from
/// a constant schedule; returns the schedule with the lowest validation loss.
pub fn train_step_sizes(
    train_set: &[HybridSample],
    validation: &[HybridSample],
    noise_var: f64,
    config: &StepTrainConfig,
) -> Result<(StepSchedule, StepTrainReport)> {
    if config.layers < 1 {
        return Err(Error::invalid("layers", "at least one layer is required"));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::invalid("batch_size/epochs", "must be positive"));
    }
    require_positive("lr", config.lr)?;
    require_positive("fd_step", config.fd_step)?;
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut schedule = StepSchedule::constant(config.layers, config.init_step)?;
    let mut best = (
        unrolled_loss(&schedule, validation, noise_var, config.weighting)?,
        schedule.clone(),
        0,
    );
    let mut report = StepTrainReport {
        train_loss: Vec::with_capacity(config.epochs),
        val_loss: Vec::with_capacity(config.epochs),
        best_epoch: 0,
    };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<HybridSample> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let mut grad = schedule_gradient(&schedule, &batch, noise_var, config)?;
            if let Some(max) = config.max_grad_norm {
                let norm = grad.norm();
                if norm > max {
                    grad *= max / norm;
                }
            }
            let candidate = StepSchedule::new(&schedule.steps - grad * config.lr)?;
            schedule = candidate;
        }
        let train_loss = unrolled_loss(&schedule, train_set, noise_var, config.weighting)?;
        let val_loss = unrolled_loss(&schedule, validation, noise_var, config.weighting)?;
        log::debug!("step-size epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        if val_loss < best.0 {
            best = (val_loss, schedule.clone(), epoch);
        }
    }
    report.best_epoch = best.2;
    Ok((best.1, report))
}

/// Mean per-layer rate trace (nats) of a schedule over a dataset.
pub fn mean_rate_trace(
    schedule: &StepSchedule,
    dataset: &[HybridSample],
    noise_var: f64,
) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let traces = dataset
        .par_iter()
        .map(|s| Ok(pga_run(&s.channels, &s.init, schedule, noise_var)?.1))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = vec![0.0; schedule.layers()];
    for t in &traces {
        for (m, r) in mean.iter_mut().zip(t) {
            *m += r / dataset.len() as f64;
        }
    }
    Ok(mean)
}

/// First layer (1-based) whose rate is within `tol` of the final value of the
/// trace and stays there for all later layers.
pub fn plateau_layer(trace: &[f64], tol: f64) -> Option<usize> {
    let last = *trace.last()?;
    let mut layer = trace.len();
    for i in (0..trace.len()).rev() {
        if (trace[i] - last).abs() <= tol {
            layer = i + 1;
        } else {
            break;
        }
    }
    Some(layer)
}
