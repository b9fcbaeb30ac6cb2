//! Autoencoder constellation design for joint communication and target
//! detection, with the QAM/PSK baselines and the Monte-Carlo evaluation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{child_rng, complex_gaussian, require_positive};
use crate::neural::{sigmoid, softmax_cross_entropy, Activation, AdamState, MlpModel};

/// Largest message length accepted (2^12 = 4096 points).
pub const MAX_BITS: usize = 12;
const HIDDEN: [usize; 3] = [16, 32, 16];
const PROB_CLAMP: f64 = 1e-12;

/// Communication decoder output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommHead {
    /// One logit per message, softmax cross-entropy.
    #[default]
    Softmax,
    /// One sigmoid per bit, summed binary cross-entropy.
    PerBit,
}

/// A labeled point set with unit average power.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    /// `points[i]` carries label `labels[i]`.
    pub points: Vec<Complex64>,
    pub labels: Vec<usize>,
}

impl Constellation {
    /// Scales the points to unit average power and checks the labels.
    pub fn normalized(points: Vec<Complex64>, labels: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if points.len() != labels.len() {
            return Err(Error::shape(
                "constellation labels",
                points.len(),
                labels.len(),
            ));
        }
        let mut seen = vec![false; points.len()];
        for &l in &labels {
            if l >= points.len() || std::mem::replace(&mut seen[l], true) {
                return Err(Error::invalid("labels", "must be a permutation of 0..M"));
            }
        }
        if points
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("points", "non-finite coordinate"));
        }
        let power = points.iter().map(|z| z.norm_sqr()).sum::<f64>() / points.len() as f64;
        if !(power > 0.0) {
            return Err(Error::invalid("points", "zero average power"));
        }
        let scale = power.sqrt();
        Ok(Self {
            points: points.into_iter().map(|z| z / scale).collect(),
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Point transmitted for a message label.
    pub fn point_for(&self, label: usize) -> Option<Complex64> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .map(|i| self.points[i])
    }

    /// `std(|x|) / mean(|x|)`; zero for constant-modulus sets.
    pub fn amplitude_spread(&self) -> f64 {
        let mags: Vec<f64> = self.points.iter().map(|z| z.norm()).collect();
        let n = mags.len() as f64;
        let mean = mags.iter().sum::<f64>() / n;
        let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }

    /// Index of the nearest point (maximum-likelihood decision in AWGN).
    pub fn nearest(&self, y: Complex64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// CSV with header `label,re,im`, one row per point in label order.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(usize, Complex64)> = self
            .labels
            .iter()
            .copied()
            .zip(self.points.iter().copied())
            .collect();
        rows.sort_by_key(|r| r.0);
        let mut out = String::from("label,re,im\n");
        for (l, z) in rows {
            out.push_str(&format!("{l},{:.8e},{:.8e}\n", z.re, z.im));
        }
        out
    }

    /// Parses the CSV written by [`Constellation::to_csv`]; the points must
    /// already have unit average power.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Decode(e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["label", "re", "im"] {
            return Err(Error::Decode("expected header label,re,im".into()));
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Decode(e.to_string()))?;
            if record.len() != 3 {
                return Err(Error::Decode(format!(
                    "expected 3 fields, found {}",
                    record.len()
                )));
            }
            let field = |i: usize| record.get(i).unwrap_or_default();
            let label: usize = field(0)
                .parse()
                .map_err(|_| Error::Decode(format!("bad label {:?}", field(0))))?;
            let re: f64 = field(1)
                .parse()
                .map_err(|_| Error::Decode(format!("bad coordinate {:?}", field(1))))?;
            let im: f64 = field(2)
                .parse()
                .map_err(|_| Error::Decode(format!("bad coordinate {:?}", field(2))))?;
            labels.push(label);
            points.push(Complex64::new(re, im));
        }
        if points.is_empty() {
            return Err(Error::Decode("no points".into()));
        }
        let power = points.iter().map(|z| z.norm_sqr()).sum::<f64>() / points.len() as f64;
        if !power.is_finite() || (power - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(power));
        }
        Self::normalized(points, labels).map_err(|e| Error::Decode(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Qam,
    Psk,
}

/// Uniform PSK with a `π/M` offset (so 4-PSK is the usual QPSK), or square /
/// cross QAM. Labels follow construction order.
pub fn baseline_constellation(kind: BaselineKind, order: usize) -> Result<Constellation> {
    if order < 2 {
        return Err(Error::invalid("order", "at least two points"));
    }
    let points: Vec<Complex64> = match kind {
        BaselineKind::Psk => (0..order)
            .map(|m| {
                Complex64::from_polar(1.0, PI / order as f64 + 2.0 * PI * m as f64 / order as f64)
            })
            .collect(),
        BaselineKind::Qam => qam_points(order)?,
    };
    let labels = (0..points.len()).collect();
    Constellation::normalized(points, labels)
}

fn qam_points(order: usize) -> Result<Vec<Complex64>> {
    if !order.is_power_of_two() || order < 4 {
        return Err(Error::invalid("order", "QAM needs a power of two ≥ 4"));
    }
    let bits = order.trailing_zeros();
    let (side, cross) = if bits % 2 == 0 {
        (1usize << (bits / 2), 0)
    } else {
        // Cross constellation: a 3·2^((b−3)/2) square grid with corner
        // blocks of side 2^((b−5)/2) removed. Eight points use a 4×2 grid.
        if bits == 3 {
            return Ok((0..8)
                .map(|i| Complex64::new(2.0 * (i % 4) as f64 - 3.0, 2.0 * (i / 4) as f64 - 1.0))
                .collect());
        }
        let side = 3 << ((bits - 3) / 2);
        (side, 1usize << ((bits - 5) / 2))
    };
    let coord = |i: usize| 2.0 * i as f64 - (side as f64 - 1.0);
    let mut pts = Vec::with_capacity(order);
    for r in 0..side {
        for c in 0..side {
            let corner = |i: usize| i < cross || i >= side - cross;
            if cross > 0 && corner(r) && corner(c) {
                continue;
            }
            pts.push(Complex64::new(coord(c), coord(r)));
        }
    }
    debug_assert_eq!(pts.len(), order);
    Ok(pts)
}

/// Bits of a message, least significant first, as 0/1 features.
pub fn message_bits(message: usize, bits: usize) -> Vec<f64> {
    (0..bits).map(|j| ((message >> j) & 1) as f64).collect()
}

fn bits_matrix(messages: &[usize], bits: usize) -> DMatrix<f64> {
    DMatrix::from_fn(messages.len(), bits, |r, c| ((messages[r] >> c) & 1) as f64)
}

fn to_rows(points: &[Complex64]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 2, |r, c| {
        if c == 0 {
            points[r].re
        } else {
            points[r].im
        }
    })
}

fn from_rows(m: &DMatrix<f64>) -> Vec<Complex64> {
    m.row_iter().map(|r| Complex64::new(r[0], r[1])).collect()
}

/// Encoder, communication decoder and radar detector trained jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct IsacAutoencoder {
    pub bits: usize,
    pub encoder: MlpModel,
    pub comm_decoder: MlpModel,
    pub radar_detector: MlpModel,
    pub eta: f64,
    pub comm_noise_var: f64,
    pub radar_noise_var: f64,
    pub comm_head: CommHead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub bits: usize,
    pub eta: f64,
    pub comm_noise_var: f64,
    pub radar_noise_var: f64,
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub comm_head: CommHead,
    pub seed: u64,
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(
                "eta",
                format!("{} outside [0, 1]", self.eta),
            ));
        }
        if self.bits == 0 || self.bits > MAX_BITS {
            return Err(Error::invalid("bits", format!("must be in 1..={MAX_BITS}")));
        }
        require_positive("comm_noise_var", self.comm_noise_var)?;
        require_positive("radar_noise_var", self.radar_noise_var)?;
        require_positive("lr", self.lr)?;
        if self.epochs == 0 || self.batch_size == 0 || self.samples_per_epoch < self.batch_size {
            return Err(Error::invalid(
                "epochs/batch_size/samples_per_epoch",
                "need at least one full batch per epoch",
            ));
        }
        Ok(())
    }
}

impl IsacAutoencoder {
    /// Fresh networks: encoder `K → (16, 32, 16) → 2` linear, decoder
    /// `2 → (16, 32, 16) → 2^K` logits (or `K` sigmoids), detector
    /// `2 → (16, 32, 16) → 1` sigmoid.
    pub fn new<R: Rng + ?Sized>(config: &AeConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let hidden = [Activation::Relu; 3];
        let widths = |i: usize, o: usize| [i, HIDDEN[0], HIDDEN[1], HIDDEN[2], o];
        let with_out = |a: Activation| [hidden[0], hidden[1], hidden[2], a];
        let order = 1usize << config.bits;
        let (comm_out, comm_act) = match config.comm_head {
            CommHead::Softmax => (order, Activation::Linear),
            CommHead::PerBit => (config.bits, Activation::Sigmoid),
        };
        Ok(Self {
            bits: config.bits,
            encoder: MlpModel::new(&widths(config.bits, 2), &with_out(Activation::Linear), rng)?,
            comm_decoder: MlpModel::new(&widths(2, comm_out), &with_out(comm_act), rng)?,
            radar_detector: MlpModel::new(&widths(2, 1), &with_out(Activation::Sigmoid), rng)?,
            eta: config.eta,
            comm_noise_var: config.comm_noise_var,
            radar_noise_var: config.radar_noise_var,
            comm_head: config.comm_head,
        })
    }

    pub fn order(&self) -> usize {
        1 << self.bits
    }

    /// Encoder outputs for the messages, scaled to unit mean power over the
    /// batch. Also returns the scale used.
    pub fn encode_batch(&self, messages: &[usize]) -> Result<(Vec<Complex64>, f64)> {
        let raw = from_rows(&self.encoder.predict(&bits_matrix(messages, self.bits))?);
        let scale = (raw.iter().map(|z| z.norm_sqr()).sum::<f64>() / raw.len() as f64).sqrt();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateBeamformer);
        }
        Ok((raw.iter().map(|z| z / scale).collect(), scale))
    }

    /// Decoded message for each observation.
    pub fn decode(&self, observations: &[Complex64]) -> Result<Vec<usize>> {
        let out = self.comm_decoder.predict(&to_rows(observations))?;
        Ok(match self.comm_head {
            CommHead::Softmax => out
                .row_iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .fold(
                            (0, f64::NEG_INFINITY),
                            |b, (i, &v)| if v > b.1 { (i, v) } else { b },
                        )
                        .0
                })
                .collect(),
            CommHead::PerBit => out
                .row_iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.5)
                        .map(|(j, _)| 1 << j)
                        .sum()
                })
                .collect(),
        })
    }

    /// Detector output `T̂ ∈ (0, 1)` for each radar observation.
    pub fn detect(&self, observations: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self
            .radar_detector
            .predict(&to_rows(observations))?
            .iter()
            .copied()
            .collect())
    }
}

/// One batch of training data: messages and the noisy observations of the
/// normalized encoder outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub messages: Vec<usize>,
    /// `y = x + n_c`
    pub comm: Vec<Complex64>,
    /// `z = T·x + n_r`
    pub radar: Vec<Complex64>,
    pub targets: Vec<bool>,
}

/// Noise draws for a batch: messages, unit-variance complex noises and
/// target flags, independent of the model.
struct BatchDraw {
    messages: Vec<usize>,
    comm_noise: Vec<Complex64>,
    radar_noise: Vec<Complex64>,
    targets: Vec<bool>,
}

fn draw_batch<R: Rng + ?Sized>(order: usize, batch: usize, rng: &mut R) -> BatchDraw {
    let mut d = BatchDraw {
        messages: Vec::with_capacity(batch),
        comm_noise: Vec::with_capacity(batch),
        radar_noise: Vec::with_capacity(batch),
        targets: Vec::with_capacity(batch),
    };
    for _ in 0..batch {
        d.messages.push(rng.random_range(0..order));
        d.comm_noise.push(complex_gaussian(rng));
        d.radar_noise.push(complex_gaussian(rng));
        d.targets.push(rng.random::<bool>());
    }
    d
}

/// Messages uniform over `2^K`, `T ~ Bernoulli(1/2)`, `y = x + n_c` and
/// `z = T·x + n_r` for the model's normalized encoder outputs.
pub fn sample_training_batch<R: Rng + ?Sized>(
    model: &IsacAutoencoder,
    batch: usize,
    rng: &mut R,
) -> Result<TrainingBatch> {
    let d = draw_batch(model.order(), batch, rng);
    let (x, _) = model.encode_batch(&d.messages)?;
    let sc = model.comm_noise_var.sqrt();
    let sr = model.radar_noise_var.sqrt();
    Ok(TrainingBatch {
        comm: x
            .iter()
            .zip(&d.comm_noise)
            .map(|(x, n)| x + n * sc)
            .collect(),
        radar: x
            .iter()
            .zip(&d.radar_noise)
            .zip(&d.targets)
            .map(|((x, n), &t)| if t { x + n * sr } else { n * sr })
            .collect(),
        messages: d.messages,
        targets: d.targets,
    })
}

/// Communication loss and its gradient with respect to the decoder output.
/// Softmax head: categorical cross-entropy on logits. Per-bit head: summed
/// binary cross-entropy on the sigmoid outputs.
pub fn comm_loss(
    outputs: &DMatrix<f64>,
    messages: &[usize],
    head: CommHead,
) -> Result<(f64, DMatrix<f64>)> {
    match head {
        CommHead::Softmax => softmax_cross_entropy(outputs, messages),
        CommHead::PerBit => {
            if messages.len() != outputs.nrows() {
                return Err(Error::shape("messages", outputs.nrows(), messages.len()));
            }
            let b = messages.len() as f64;
            let mut loss = 0.0;
            let mut grad = DMatrix::zeros(outputs.nrows(), outputs.ncols());
            for (r, &m) in messages.iter().enumerate() {
                for j in 0..outputs.ncols() {
                    let t = ((m >> j) & 1) as f64;
                    let (l, g) = bce(outputs[(r, j)], t);
                    loss += l;
                    grad[(r, j)] = g / b;
                }
            }
            Ok((loss / b, grad))
        }
    }
}

fn bce(p: f64, t: f64) -> (f64, f64) {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    (
        -(t * p.ln() + (1.0 - t) * (1.0 - p).ln()),
        (p - t) / (p * (1.0 - p)),
    )
}

/// Binary cross-entropy of detector outputs against target flags, with the
/// gradient with respect to those outputs.
pub fn radar_loss(outputs: &[f64], targets: &[bool]) -> Result<(f64, Vec<f64>)> {
    if outputs.len() != targets.len() {
        return Err(Error::shape("target flags", outputs.len(), targets.len()));
    }
    if outputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let b = outputs.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(outputs.len());
    for (&p, &t) in outputs.iter().zip(targets) {
        let (l, g) = bce(p, if t { 1.0 } else { 0.0 });
        loss += l;
        grad.push(g / b);
    }
    Ok((loss / b, grad))
}

/// Combined loss `η L_radar + (1 − η) L_comm` for one batch and its
/// gradients for all three networks.
pub struct JointStep {
    pub loss: f64,
    pub comm_loss: f64,
    pub radar_loss: f64,
    pub encoder: crate::neural::Gradients,
    pub comm_decoder: crate::neural::Gradients,
    pub radar_detector: crate::neural::Gradients,
}

fn joint_step(model: &IsacAutoencoder, d: &BatchDraw) -> Result<JointStep> {
    let b = d.messages.len() as f64;
    let enc_trace = model
        .encoder
        .forward(&bits_matrix(&d.messages, model.bits))?;
    let raw = enc_trace.output();
    let scale = (raw.iter().map(|v| v * v).sum::<f64>() / b).sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateBeamformer);
    }
    let x = raw / scale;

    let sc = model.comm_noise_var.sqrt();
    let y = DMatrix::from_fn(x.nrows(), 2, |r, c| {
        x[(r, c)]
            + sc * if c == 0 {
                d.comm_noise[r].re
            } else {
                d.comm_noise[r].im
            }
    });
    let dec_trace = model.comm_decoder.forward(&y)?;
    let (lc, g_dec) = comm_loss(dec_trace.output(), &d.messages, model.comm_head)?;
    let dec_grads = model.comm_decoder.backward(&dec_trace, &g_dec)?;

    let sr = model.radar_noise_var.sqrt();
    let tflag = |r: usize| if d.targets[r] { 1.0 } else { 0.0 };
    let z = DMatrix::from_fn(x.nrows(), 2, |r, c| {
        tflag(r) * x[(r, c)]
            + sr * if c == 0 {
                d.radar_noise[r].re
            } else {
                d.radar_noise[r].im
            }
    });
    let det_trace = model.radar_detector.forward(&z)?;
    let probs: Vec<f64> = det_trace.output().iter().copied().collect();
    let (lr, g_det) = radar_loss(&probs, &d.targets)?;
    let det_grads = model.radar_detector.backward(
        &det_trace,
        &DMatrix::from_column_slice(g_det.len(), 1, &g_det),
    )?;

    let eta = model.eta;
    let mut enc_grads = {
        let mut g_x = DMatrix::zeros(x.nrows(), 2);
        for r in 0..x.nrows() {
            for c in 0..2 {
                g_x[(r, c)] = (1.0 - eta) * dec_grads.input[(r, c)]
                    + eta * tflag(r) * det_grads.input[(r, c)];
            }
        }
        // x = u / s with s² = mean over the batch of |u|²
        let dot = x.component_mul(&g_x).sum() / b;
        let g_u = (g_x - &x * dot) / scale;
        model.encoder.backward(&enc_trace, &g_u)?
    };
    // The decoder and detector see their own weighted losses.
    scale_grads(&mut enc_grads, 1.0);
    let mut dec_grads = dec_grads;
    scale_grads(&mut dec_grads, 1.0 - eta);
    let mut det_grads = det_grads;
    scale_grads(&mut det_grads, eta);
    Ok(JointStep {
        loss: eta * lr + (1.0 - eta) * lc,
        comm_loss: lc,
        radar_loss: lr,
        encoder: enc_grads,
        comm_decoder: dec_grads,
        radar_detector: det_grads,
    })
}

fn scale_grads(g: &mut crate::neural::Gradients, s: f64) {
    if s == 1.0 {
        return;
    }
    for l in &mut g.layers {
        l.weights *= s;
        l.bias *= s;
    }
}

/// Combined loss of a model on a fixed batch (used for gradient checks).
pub fn joint_loss<R: Rng + ?Sized>(
    model: &IsacAutoencoder,
    batch: usize,
    rng: &mut R,
) -> Result<JointStep> {
    let d = draw_batch(model.order(), batch, rng);
    joint_step(model, &d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeReport {
    /// Mean combined loss per epoch.
    pub loss: Vec<f64>,
    pub comm_loss: Vec<f64>,
    pub radar_loss: Vec<f64>,
}

/// Adam on `η L_radar + (1 − η) L_comm`, fresh samples every batch.
pub fn train_isac_ae(config: &AeConfig) -> Result<(IsacAutoencoder, AeReport)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = IsacAutoencoder::new(config, &mut rng)?;
    let mut opt_enc = AdamState::new(&model.encoder, config.lr);
    let mut opt_dec = AdamState::new(&model.comm_decoder, config.lr);
    let mut opt_det = AdamState::new(&model.radar_detector, config.lr);
    let batches = config.samples_per_epoch / config.batch_size;
    let mut report = AeReport {
        loss: Vec::with_capacity(config.epochs),
        comm_loss: Vec::with_capacity(config.epochs),
        radar_loss: Vec::with_capacity(config.epochs),
    };
    for epoch in 0..config.epochs {
        let (mut l, mut lc, mut lr) = (0.0, 0.0, 0.0);
        for _ in 0..batches {
            let d = draw_batch(model.order(), config.batch_size, &mut rng);
            let step = joint_step(&model, &d)?;
            opt_enc.step(&mut model.encoder, &step.encoder)?;
            opt_dec.step(&mut model.comm_decoder, &step.comm_decoder)?;
            opt_det.step(&mut model.radar_detector, &step.radar_detector)?;
            l += step.loss / batches as f64;
            lc += step.comm_loss / batches as f64;
            lr += step.radar_loss / batches as f64;
        }
        log::debug!("autoencoder epoch {epoch}: loss {l:.5} comm {lc:.5} radar {lr:.5}");
        report.loss.push(l);
        report.comm_loss.push(lc);
        report.radar_loss.push(lr);
    }
    Ok((model, report))
}

/// Encodes every message and normalizes to unit average power.
pub fn extract_constellation(model: &IsacAutoencoder) -> Result<Constellation> {
    let messages: Vec<usize> = (0..model.order()).collect();
    let (points, _) = model.encode_batch(&messages)?;
    Constellation::normalized(points, messages)
}

/// Posterior `P(T = 1 | z)` for equally likely presence and a uniformly
/// chosen point of the constellation, computed from the likelihood ratio
/// `mean_i exp(−(|z − x_i|² − |z|²)/σ²)` in the log domain.
pub fn presence_posterior(constellation: &Constellation, z: Complex64, noise_var: f64) -> f64 {
    let base = z.norm_sqr();
    let logs: Vec<f64> = constellation
        .points
        .iter()
        .map(|x| -((z - x).norm_sqr() - base) / noise_var)
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_lr = max + (logs.iter().map(|l| (l - max).exp()).sum::<f64>() / logs.len() as f64).ln();
    sigmoid(log_lr)
}

/// Symbol error rate and detection rates of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsacMetrics {
    pub ser: f64,
    pub pd: f64,
    pub pfa: f64,
}

/// Noise levels and posterior threshold shared by every compared design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub comm_noise_var: f64,
    pub radar_noise_var: f64,
    /// Target declared present when the detector output exceeds this.
    pub threshold: f64,
}

const MIN_TRIALS: usize = 10_000;
const CHUNK: usize = 4096;

fn chunked<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = child_rng(seed, c as u64);
            f(&mut rng, CHUNK.min(trials - c * CHUNK))
        })
        .collect()
}

fn warn_trials(trials: usize) {
    if trials < MIN_TRIALS {
        log::warn!("{trials} Monte-Carlo trials is below the {MIN_TRIALS} statistical floor");
    }
}

/// Monte-Carlo SER with the nearest-point decoder and Pd/Pfa of the
/// likelihood-ratio detector thresholded at `calibration.threshold`.
pub fn evaluate_constellation(
    constellation: &Constellation,
    cal: &Calibration,
    trials: usize,
    seed: u64,
) -> IsacMetrics {
    warn_trials(trials);
    let sc = cal.comm_noise_var.sqrt();
    let sr = cal.radar_noise_var.sqrt();
    let m = constellation.len();
    let counts = chunked(trials, seed, |rng, n| {
        let (mut err, mut det, mut fa) = (0usize, 0usize, 0usize);
        for _ in 0..n {
            let i = rng.random_range(0..m);
            let x = constellation.points[i];
            if constellation.nearest(x + complex_gaussian(rng) * sc) != i {
                err += 1;
            }
            if presence_posterior(
                constellation,
                x + complex_gaussian(rng) * sr,
                cal.radar_noise_var,
            ) > cal.threshold
            {
                det += 1;
            }
            if presence_posterior(
                constellation,
                complex_gaussian(rng) * sr,
                cal.radar_noise_var,
            ) > cal.threshold
            {
                fa += 1;
            }
        }
        (err, det, fa)
    });
    let t = trials.max(1) as f64;
    let sum = counts
        .iter()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    IsacMetrics {
        ser: sum.0 as f64 / t,
        pd: sum.1 as f64 / t,
        pfa: sum.2 as f64 / t,
    }
}

/// Monte-Carlo SER of the learned decoder and Pd/Pfa of the learned
/// detector, transmitting the normalized learned constellation.
pub fn evaluate_autoencoder(
    model: &IsacAutoencoder,
    cal: &Calibration,
    trials: usize,
    seed: u64,
) -> Result<IsacMetrics> {
    warn_trials(trials);
    let constellation = extract_constellation(model)?;
    let sc = cal.comm_noise_var.sqrt();
    let sr = cal.radar_noise_var.sqrt();
    let m = model.order();
    let counts = chunked(trials, seed, |rng, n| -> Result<(usize, usize, usize)> {
        let mut labels = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut h1 = Vec::with_capacity(n);
        let mut h0 = Vec::with_capacity(n);
        for _ in 0..n {
            let i = rng.random_range(0..m);
            let x = constellation.points[i];
            labels.push(constellation.labels[i]);
            y.push(x + complex_gaussian(rng) * sc);
            h1.push(x + complex_gaussian(rng) * sr);
            h0.push(complex_gaussian(rng) * sr);
        }
        let decoded = model.decode(&y)?;
        let err = decoded.iter().zip(&labels).filter(|(a, b)| a != b).count();
        let det = model
            .detect(&h1)?
            .iter()
            .filter(|&&p| p > cal.threshold)
            .count();
        let fa = model
            .detect(&h0)?
            .iter()
            .filter(|&&p| p > cal.threshold)
            .count();
        Ok((err, det, fa))
    });
    let t = trials.max(1) as f64;
    let mut sum = (0, 0, 0);
    for c in counts {
        let c = c?;
        sum = (sum.0 + c.0, sum.1 + c.1, sum.2 + c.2);
    }
    Ok(IsacMetrics {
        ser: sum.0 as f64 / t,
        pd: sum.1 as f64 / t,
        pfa: sum.2 as f64 / t,
    })
}

/// Operating point a reference constellation should reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    pub ser: f64,
    pub pd: f64,
    pub pfa: f64,
}

fn bisect_log(lo: f64, hi: f64, iterations: usize, mut too_high: impl FnMut(f64) -> bool) -> f64 {
    // geometric bisection: `too_high(v)` is true when v overshoots
    let (mut lo, mut hi) = (lo.ln(), hi.ln());
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if too_high(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Solves for the communication noise, radar noise and posterior threshold
/// at which `reference` hits the target SER, Pd and Pfa. Every Monte-Carlo
/// curve reuses one set of unit noise draws, so each is monotone in the
/// searched parameter and the bisections are deterministic.
pub fn calibrate(
    reference: &Constellation,
    target: &CalibrationTarget,
    trials: usize,
    seed: u64,
) -> Result<Calibration> {
    for (name, v) in [("ser", target.ser), ("pd", target.pd), ("pfa", target.pfa)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(name, format!("{v} outside (0, 1)")));
        }
    }
    warn_trials(trials);
    let mut rng = child_rng(seed, 0);
    let m = reference.len();
    let draws: Vec<(usize, Complex64, Complex64, Complex64)> = (0..trials)
        .map(|_| {
            (
                rng.random_range(0..m),
                complex_gaussian(&mut rng),
                complex_gaussian(&mut rng),
                complex_gaussian(&mut rng),
            )
        })
        .collect();
    let t = trials as f64;

    let ser_at = |var: f64| {
        let s = var.sqrt();
        draws
            .par_iter()
            .filter(|(i, n, _, _)| reference.nearest(reference.points[*i] + n * s) != *i)
            .count() as f64
            / t
    };
    let comm_noise_var = bisect_log(1e-6, 1e2, 60, |v| ser_at(v) > target.ser);

    // For a given radar noise, the threshold is the (1 − Pfa) quantile of the
    // posterior under H0; Pd then falls as the noise grows.
    let threshold_at = |var: f64| {
        let s = var.sqrt();
        let mut h0: Vec<f64> = draws
            .par_iter()
            .map(|(_, _, _, n)| presence_posterior(reference, n * s, var))
            .collect();
        h0.sort_by(|a, b| a.total_cmp(b));
        let idx = (((1.0 - target.pfa) * t).ceil() as usize).clamp(1, draws.len()) - 1;
        h0[idx]
    };
    let pd_at = |var: f64| {
        let s = var.sqrt();
        let thr = threshold_at(var);
        let det = draws
            .par_iter()
            .filter(|(i, _, n, _)| {
                presence_posterior(reference, reference.points[*i] + n * s, var) > thr
            })
            .count() as f64;
        det / t
    };
    let radar_noise_var = bisect_log(1e-4, 1e2, 50, |v| pd_at(v) < target.pd);
    let threshold = threshold_at(radar_noise_var);
    Ok(Calibration {
        comm_noise_var,
        radar_noise_var,
        threshold,
    })
}
