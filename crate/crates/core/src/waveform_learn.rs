//! Unsupervised waveform network: features, the power-projection output
//! layer, the trade-off loss, dataset generation and the training pipeline.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{sample_channel_matrix, ArrayGeometry, ChannelMatrix, RicianParams};
use crate::classical_design::{
    directional_covariance, procrustes_waveform, reference_covariance_omni, CovarianceTemplate,
    DirectionalOptions, Provenance, WaveformDesign,
};
use crate::error::{Error, Result};
use crate::linalg::{child_rng, hermitian_sqrt, CMat};
use crate::metrics::angle_grid_deg;
use crate::neural::{train, Activation, ByteReader, MlpModel, TrainConfig, TrainReport};

/// One training example: channel, desired symbols and sensing reference.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSample {
    pub channel: ChannelMatrix,
    /// K×τ desired symbols.
    pub d: CMat,
    /// M×τ reference waveform.
    pub x0: CMat,
}

impl WaveformSample {
    pub fn num_users(&self) -> usize {
        self.channel.num_users()
    }

    pub fn num_antennas(&self) -> usize {
        self.channel.num_antennas()
    }

    pub fn frame_len(&self) -> usize {
        self.d.ncols()
    }

    fn check(&self) -> Result<()> {
        let (k, m, tau) = (self.num_users(), self.num_antennas(), self.frame_len());
        if self.d.nrows() != k {
            return Err(Error::shape("desired symbols D", k, self.d.nrows()));
        }
        if self.x0.nrows() != m || self.x0.ncols() != tau {
            return Err(Error::shape(
                "reference waveform X0",
                format!("{m}x{tau}"),
                format!("{}x{}", self.x0.nrows(), self.x0.ncols()),
            ));
        }
        Ok(())
    }
}

/// Fully connected architecture sized from (M, K, τ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveformNetSpec {
    pub num_antennas: usize,
    pub num_users: usize,
    pub frame_len: usize,
}

impl WaveformNetSpec {
    /// `N = K(M + τ) + Mτ` complex input entries.
    pub fn n(&self) -> usize {
        self.num_users * (self.num_antennas + self.frame_len) + self.num_antennas * self.frame_len
    }

    pub fn widths(&self) -> [usize; 4] {
        let n = self.n();
        [
            2 * n,
            20 * n,
            10 * n,
            2 * self.num_antennas * self.frame_len,
        ]
    }

    pub fn activations(&self) -> [Activation; 3] {
        [Activation::Relu, Activation::Relu, Activation::Tanh]
    }

    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MlpModel> {
        MlpModel::new(&self.widths(), &self.activations(), rng)
    }

    pub fn of_sample(sample: &WaveformSample) -> Self {
        Self {
            num_antennas: sample.num_antennas(),
            num_users: sample.num_users(),
            frame_len: sample.frame_len(),
        }
    }
}

fn push_complex(out: &mut Vec<f64>, m: &CMat) {
    // nalgebra storage is column-major, so iteration order is vec(·).
    out.extend(m.iter().map(|z| z.re));
    out.extend(m.iter().map(|z| z.im));
}

/// `[Re vec H, Im vec H, Re vec D, Im vec D, Re vec X0, Im vec X0]`,
/// column-major vectorization, length 2N.
pub fn build_features(sample: &WaveformSample) -> Result<Vec<f64>> {
    sample.check()?;
    let spec = WaveformNetSpec::of_sample(sample);
    let mut out = Vec::with_capacity(2 * spec.n());
    push_complex(&mut out, &sample.channel.entries);
    push_complex(&mut out, &sample.d);
    push_complex(&mut out, &sample.x0);
    Ok(out)
}

/// Features of many samples as the rows of one matrix.
pub fn feature_matrix(samples: &[WaveformSample]) -> Result<DMatrix<f64>> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let width = 2 * WaveformNetSpec::of_sample(first).n();
    let mut out = DMatrix::zeros(samples.len(), width);
    for (r, s) in samples.iter().enumerate() {
        let f = build_features(s)?;
        if f.len() != width {
            return Err(Error::shape("feature width", width, f.len()));
        }
        for (c, v) in f.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Inverse of the stacking: first Mτ values are `Re vec X`, the rest `Im vec X`.
pub fn unstack_waveform(raw: &[f64], rows: usize, cols: usize) -> Result<CMat> {
    let len = rows * cols;
    if raw.len() != 2 * len {
        return Err(Error::shape("stacked waveform", 2 * len, raw.len()));
    }
    Ok(CMat::from_iterator(
        rows,
        cols,
        (0..len).map(|i| Complex64::new(raw[i], raw[len + i])),
    ))
}

pub fn stack_waveform(x: &CMat) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len());
    push_complex(&mut out, x);
    out
}

/// Output layer: the stacked waveform unchanged inside the ball
/// `‖ϑ‖² ≤ τ P_T`, radially scaled onto its surface outside it.
pub fn power_projection(raw: &[f64], power: f64, rows: usize, cols: usize) -> Result<CMat> {
    let x = unstack_waveform(raw, rows, cols)?;
    let budget = cols as f64 * power;
    let norm_sq: f64 = raw.iter().map(|v| v * v).sum();
    if norm_sq <= budget {
        return Ok(x);
    }
    Ok(x * Complex64::new((budget / norm_sq).sqrt(), 0.0))
}

/// Pulls a gradient with respect to the projected output back to the raw
/// network output: identity inside the ball, `(c/‖ϑ‖)(g − ϑ(ϑ·g)/‖ϑ‖²)` on the
/// scaled branch.
pub fn projection_backward(raw: &[f64], grad_out: &[f64], budget: f64) -> Vec<f64> {
    let norm_sq: f64 = raw.iter().map(|v| v * v).sum();
    if norm_sq <= budget {
        return grad_out.to_vec();
    }
    let norm = norm_sq.sqrt();
    let scale = budget.sqrt() / norm;
    let dot: f64 = raw.iter().zip(grad_out).map(|(a, b)| a * b).sum();
    raw.iter()
        .zip(grad_out)
        .map(|(&r, &g)| scale * (g - r * dot / norm_sq))
        .collect()
}

/// Mean of `η‖H X − D‖² + (1 − η)‖X − X0‖²` over the batch, with the gradient
/// for each waveform packed as `∂/∂Re + j ∂/∂Im`.
pub fn isac_waveform_loss(
    predictions: &[CMat],
    samples: &[&WaveformSample],
    eta: f64,
) -> Result<(f64, Vec<CMat>)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", format!("{eta} outside [0, 1]")));
    }
    if predictions.len() != samples.len() {
        return Err(Error::shape("loss batch", samples.len(), predictions.len()));
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ns = samples.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(samples.len());
    for (x, s) in predictions.iter().zip(samples) {
        let h = &s.channel.entries;
        if x.shape() != s.x0.shape() {
            return Err(Error::shape(
                "predicted waveform",
                format!("{:?}", s.x0.shape()),
                format!("{:?}", x.shape()),
            ));
        }
        let residual = h * x - &s.d;
        let deviation = x - &s.x0;
        loss += eta * residual.norm_squared() + (1.0 - eta) * deviation.norm_squared();
        let g = (h.adjoint() * residual * Complex64::new(eta, 0.0)
            + deviation * Complex64::new(1.0 - eta, 0.0))
            * Complex64::new(2.0 / ns, 0.0);
        grads.push(g);
    }
    Ok((loss / ns, grads))
}

/// Loss of raw network outputs (rows) after projection, with the gradient
/// with respect to those raw outputs.
pub fn raw_output_loss(
    outputs: &DMatrix<f64>,
    samples: &[&WaveformSample],
    eta: f64,
    power: f64,
) -> Result<(f64, DMatrix<f64>)> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let (m, tau) = (first.num_antennas(), first.frame_len());
    let budget = tau as f64 * power;
    let raws: Vec<Vec<f64>> = outputs
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let projected = raws
        .iter()
        .map(|raw| power_projection(raw, power, m, tau))
        .collect::<Result<Vec<_>>>()?;
    let (loss, grads) = isac_waveform_loss(&projected, samples, eta)?;
    let mut out = DMatrix::zeros(outputs.nrows(), outputs.ncols());
    for (r, (raw, g)) in raws.iter().zip(&grads).enumerate() {
        let back = projection_backward(raw, &stack_waveform(g), budget);
        for (c, v) in back.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok((loss, out))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceKind {
    Omni,
    /// Directional template toward these angles (radians).
    Directional {
        targets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub num_antennas: usize,
    pub frame_len: usize,
    pub power: f64,
    /// One Rician factor per user; K is its length.
    pub rician_factors: Vec<f64>,
    pub large_scale_gain: f64,
    /// Departure angles are drawn uniformly from this range (radians).
    pub angle_range: (f64, f64),
    pub reference: ReferenceKind,
}

impl DatasetConfig {
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::half_wavelength(self.num_antennas)
    }

    pub fn num_users(&self) -> usize {
        self.rician_factors.len()
    }

    pub fn template(&self) -> Result<CovarianceTemplate> {
        match &self.reference {
            ReferenceKind::Omni => reference_covariance_omni(self.power, self.num_antennas),
            ReferenceKind::Directional { targets } => {
                let grid = angle_grid_deg(-90.0, 90.0, 1.0)?;
                directional_covariance(
                    targets,
                    self.power,
                    &self.geometry()?,
                    &grid,
                    &DirectionalOptions::default(),
                )
            }
        }
    }
}

/// Unit-power QPSK symbol.
pub fn qpsk_symbol<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re = if rng.random::<bool>() { s } else { -s };
    let im = if rng.random::<bool>() { s } else { -s };
    Complex64::new(re, im)
}

pub fn qpsk_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut out = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            out[(r, c)] = qpsk_symbol(rng);
        }
    }
    out
}

/// Draws one sample for a given channel, sharing the reference template.
pub fn sample_for_channel<R: Rng + ?Sized>(
    channel: ChannelMatrix,
    template: &CovarianceTemplate,
    frame_len: usize,
    rng: &mut R,
) -> Result<WaveformSample> {
    let d = qpsk_matrix(channel.num_users(), frame_len, rng);
    let x0 = reference_waveform(template, &channel.entries, &d)?;
    Ok(WaveformSample { channel, d, x0 })
}

/// Covariance-matched reference waveform. With `τ ≥ M` this is the exact
/// Procrustes solution; shorter frames cannot carry a full-rank covariance, so
/// the rank-τ rotation of the template square root is used and rescaled to
/// `‖X0‖² = τ P_T`.
pub fn reference_waveform(template: &CovarianceTemplate, h: &CMat, d: &CMat) -> Result<CMat> {
    let m = template.matrix.nrows();
    let tau = d.ncols();
    if tau >= m {
        return Ok(procrustes_waveform(template, h, d)?.x);
    }
    if h.ncols() != m || h.nrows() != d.nrows() {
        return Err(Error::shape(
            "channel H",
            format!("{}x{m}", d.nrows()),
            format!("{}x{}", h.nrows(), h.ncols()),
        ));
    }
    let f = hermitian_sqrt(&template.matrix);
    let svd = (f.adjoint() * h.adjoint() * d).svd(true, true);
    let x = f * svd.u.expect("requested U") * svd.v_t.expect("requested Vᴴ");
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateBeamformer);
    }
    Ok(x * Complex64::new((tau as f64 * template.power).sqrt() / norm, 0.0))
}

pub fn draw_channel<R: Rng + ?Sized>(
    config: &DatasetConfig,
    geom: &ArrayGeometry,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    let (lo, hi) = config.angle_range;
    let users = config
        .rician_factors
        .iter()
        .map(|&k| RicianParams::new(k, config.large_scale_gain, rng.random_range(lo..=hi)))
        .collect::<Result<Vec<_>>>()?;
    sample_channel_matrix(&users, geom, rng)
}

/// `count` samples; sample i uses the child stream i of `seed`, so the result
/// does not depend on thread scheduling.
pub fn generate_dataset(
    config: &DatasetConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<WaveformSample>> {
    if config.rician_factors.is_empty() {
        return Err(Error::NoUsers);
    }
    if !(config.angle_range.0 <= config.angle_range.1) {
        return Err(Error::invalid(
            "angle_range",
            "lower bound exceeds upper bound",
        ));
    }
    let geom = config.geometry()?;
    let template = config.template()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, i as u64);
            let channel = draw_channel(config, &geom, &mut rng)?;
            sample_for_channel(channel, &template, config.frame_len, &mut rng)
        })
        .collect()
}

/// Index split of a dataset into train / validation / held-out test rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded 60/20/20 split.
pub fn split_dataset(count: usize, seed: u64) -> DataSplit {
    let mut idx: Vec<usize> = (0..count).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = count * 3 / 5;
    let n_val = count / 5;
    DataSplit {
        train: idx[..n_train].to_vec(),
        validation: idx[n_train..n_train + n_val].to_vec(),
        test: idx[n_train + n_val..].to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct TrainedWaveformNet {
    pub model: MlpModel,
    pub spec: WaveformNetSpec,
    pub power: f64,
    pub split: DataSplit,
    pub report: TrainReport,
}

/// Relabels a sample by symmetries of the loss: a permutation of the users,
/// a permutation of the frame columns, a quarter-turn phase per column and
/// an optional complex conjugation of everything (the mirror-image
/// geometry). The optimal waveform of the result is the same relabeling of
/// the original optimum, and QPSK symbols stay QPSK, so the copy is a valid
/// new sample.
pub fn augment_sample<R: Rng + ?Sized>(sample: &WaveformSample, rng: &mut R) -> WaveformSample {
    let (k, tau) = (sample.num_users(), sample.frame_len());
    let mut users: Vec<usize> = (0..k).collect();
    users.shuffle(rng);
    let mut cols: Vec<usize> = (0..tau).collect();
    cols.shuffle(rng);
    let turns = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let phases: Vec<Complex64> = (0..tau).map(|_| turns[rng.random_range(0..4)]).collect();
    let h = &sample.channel.entries;
    let entries = CMat::from_fn(k, h.ncols(), |r, c| h[(users[r], c)]);
    let d = CMat::from_fn(k, tau, |r, c| sample.d[(users[r], cols[c])] * phases[c]);
    let x0 = CMat::from_fn(sample.x0.nrows(), tau, |r, c| {
        sample.x0[(r, cols[c])] * phases[c]
    });
    let mut per_user_params: Vec<RicianParams> = users
        .iter()
        .map(|&u| sample.channel.per_user_params[u])
        .collect();
    if rng.random::<bool>() {
        for p in &mut per_user_params {
            p.departure_angle = -p.departure_angle;
        }
        return WaveformSample {
            channel: ChannelMatrix {
                entries: entries.conjugate(),
                per_user_params,
            },
            d: d.conjugate(),
            x0: x0.conjugate(),
        };
    }
    WaveformSample {
        channel: ChannelMatrix {
            entries,
            per_user_params,
        },
        d,
        x0,
    }
}

/// Trains the waveform network on the 60% split with early stopping on the
/// 20% validation split; the last 20% is left untouched for evaluation.
pub fn train_waveform_net(
    dataset: &[WaveformSample],
    eta: f64,
    power: f64,
    config: &TrainConfig,
) -> Result<TrainedWaveformNet> {
    train_waveform_net_augmented(dataset, eta, power, config, 0)
}

/// As [`train_waveform_net`], with `copies` symmetry-relabeled versions of
/// every training sample (see [`augment_sample`]) added to the training rows.
/// Validation and held-out rows are never augmented.
pub fn train_waveform_net_augmented(
    dataset: &[WaveformSample],
    eta: f64,
    power: f64,
    config: &TrainConfig,
    copies: usize,
) -> Result<TrainedWaveformNet> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", format!("{eta} outside [0, 1]")));
    }
    config.validate()?;
    let split = split_dataset(dataset.len(), config.seed ^ SPLIT_SALT);
    if split.train.len() < config.batch_size {
        return Err(Error::invalid(
            "dataset",
            format!(
                "{} training samples cannot fill a batch of {}",
                split.train.len(),
                config.batch_size
            ),
        ));
    }
    let spec = WaveformNetSpec::of_sample(&dataset[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = spec.build(&mut rng)?;

    let mut rows: Vec<WaveformSample> = dataset.to_vec();
    let mut train_rows = split.train.clone();
    let mut aug_rng = ChaCha8Rng::seed_from_u64(config.seed ^ AUGMENT_SALT);
    for _ in 0..copies {
        for &i in &split.train {
            train_rows.push(rows.len());
            rows.push(augment_sample(&dataset[i], &mut aug_rng));
        }
    }
    let inputs = feature_matrix(&rows)?;
    let loss = |outputs: &DMatrix<f64>, batch_rows: &[usize]| {
        let batch: Vec<&WaveformSample> = batch_rows.iter().map(|&r| &rows[r]).collect();
        raw_output_loss(outputs, &batch, eta, power)
    };
    let report = train(
        &mut model,
        &inputs,
        &train_rows,
        &split.validation,
        loss,
        config,
    )?;
    Ok(TrainedWaveformNet {
        model,
        spec,
        power,
        split,
        report,
    })
}

const SPLIT_SALT: u64 = 0x005e_ed0f_5911;
const AUGMENT_SALT: u64 = 0xa06_3e27;

pub fn predict_waveforms(
    model: &MlpModel,
    samples: &[WaveformSample],
    power: f64,
) -> Result<Vec<WaveformDesign>> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let (m, tau) = (first.num_antennas(), first.frame_len());
    let outputs = model.predict(&feature_matrix(samples)?)?;
    outputs
        .row_iter()
        .map(|row| {
            let raw: Vec<f64> = row.iter().copied().collect();
            Ok(WaveformDesign {
                x: power_projection(&raw, power, m, tau)?,
                power,
                provenance: Provenance::Learned,
            })
        })
        .collect()
}

pub fn predict_waveform(
    model: &MlpModel,
    sample: &WaveformSample,
    power: f64,
) -> Result<WaveformDesign> {
    Ok(predict_waveforms(model, std::slice::from_ref(sample), power)?.remove(0))
}

const DATASET_MAGIC: &[u8; 8] = b"ISACWDS1";
const DATASET_VERSION: u32 = 1;

fn put_complex(out: &mut Vec<u8>, m: &CMat) {
    for z in m.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

fn get_complex(r: &mut ByteReader<'_>, rows: usize, cols: usize) -> Result<CMat> {
    let mut m = CMat::zeros(rows, cols);
    for z in m.iter_mut() {
        let re = r.f64()?;
        let im = r.f64()?;
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Decode("non-finite entry".into()));
        }
        *z = Complex64::new(re, im);
    }
    Ok(m)
}

/// Binary cache, little-endian: magic `ISACWDS1`, u32 version, u32 M, u32 K,
/// u32 τ, u64 count; per sample the K user parameter triples
/// (Rician factor, large-scale gain, angle) as f64, then H (K×M), D (K×τ) and
/// X0 (M×τ) as column-major (re, im) f64 pairs.
pub fn encode_dataset(samples: &[WaveformSample]) -> Result<Vec<u8>> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let spec = WaveformNetSpec::of_sample(first);
    let mut out = Vec::new();
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    for v in [spec.num_antennas, spec.num_users, spec.frame_len] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        s.check()?;
        if WaveformNetSpec::of_sample(s) != spec {
            return Err(Error::invalid(
                "dataset",
                "samples have different dimensions",
            ));
        }
        for p in &s.channel.per_user_params {
            for v in [p.rician_factor, p.large_scale_gain, p.departure_angle] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        put_complex(&mut out, &s.channel.entries);
        put_complex(&mut out, &s.d);
        put_complex(&mut out, &s.x0);
    }
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Vec<WaveformSample>> {
    let mut r = ByteReader::new(bytes);
    if r.take(8)? != DATASET_MAGIC {
        return Err(Error::Decode("bad magic".into()));
    }
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::Decode(format!("unsupported version {version}")));
    }
    let m = r.u32()? as usize;
    let k = r.u32()? as usize;
    let tau = r.u32()? as usize;
    let count = r.u64()?;
    if m == 0 || k == 0 || tau == 0 {
        return Err(Error::Decode("zero dimension".into()));
    }
    let per_sample = (3 * k as u64)
        .checked_add(2 * ((k * m) as u64 + (k * tau) as u64 + (m * tau) as u64))
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Decode("sample size overflow".into()))?;
    if count.checked_mul(per_sample) != Some(r.remaining() as u64) {
        return Err(Error::Decode(format!(
            "{count} samples of {per_sample} bytes do not match {} remaining bytes",
            r.remaining()
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut params = Vec::with_capacity(k);
        for _ in 0..k {
            let (kf, gain, angle) = (r.f64()?, r.f64()?, r.f64()?);
            let p = RicianParams::new(kf, gain, angle).map_err(|e| Error::Decode(e.to_string()))?;
            params.push(p);
        }
        let h = get_complex(&mut r, k, m)?;
        let d = get_complex(&mut r, k, tau)?;
        let x0 = get_complex(&mut r, m, tau)?;
        out.push(WaveformSample {
            channel: ChannelMatrix {
                entries: h,
                per_user_params: params,
            },
            d,
            x0,
        });
    }
    Ok(out)
}

pub fn save_dataset(samples: &[WaveformSample], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_dataset(samples)?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<WaveformSample>> {
    decode_dataset(&std::fs::read(path)?)
}
