//! Small dense-network engine: forward and reverse passes, Adam, and a
//! mini-batch trainer with early stopping.
//!
//! Batches are row-major in the sense that each row of the input matrix is
//! one sample; a layer maps `B×in` to `B×out` via `A W + 1 bᵀ`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
    Sigmoid,
    /// Row-wise softmax.
    Softmax,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
            Activation::Softmax => 4,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Activation::Linear,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Sigmoid,
            4 => Activation::Softmax,
            _ => return None,
        })
    }

    fn apply(self, z: &mut DMatrix<f64>) {
        match self {
            Activation::Linear => {}
            Activation::Relu => z.apply(|v| *v = v.max(0.0)),
            Activation::Tanh => z.apply(|v| *v = v.tanh()),
            Activation::Sigmoid => z.apply(|v| *v = sigmoid(*v)),
            Activation::Softmax => {
                for mut row in z.row_iter_mut() {
                    let max = row.max();
                    row.apply(|v| *v = (*v - max).exp());
                    let sum = row.sum();
                    row /= sum;
                }
            }
        }
    }

    /// Gradient with respect to the pre-activation, from the activation
    /// output `a` and the upstream gradient `g`.
    fn backprop(self, a: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Activation::Linear => g.clone(),
            Activation::Relu => g.zip_map(a, |g, a| if a > 0.0 { g } else { 0.0 }),
            Activation::Tanh => g.zip_map(a, |g, a| g * (1.0 - a * a)),
            Activation::Sigmoid => g.zip_map(a, |g, a| g * a * (1.0 - a)),
            Activation::Softmax => {
                let mut out = g.component_mul(a);
                for (r, mut row) in out.row_iter_mut().enumerate() {
                    let dot = row.sum();
                    for c in 0..row.len() {
                        row[c] -= a[(r, c)] * dot;
                    }
                }
                out
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `in × out`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Activations of every layer; entry 0 is the input batch.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub activations: Vec<DMatrix<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &DMatrix<f64> {
        self.activations
            .last()
            .expect("trace holds at least the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    /// Gradient with respect to the input batch.
    pub input: DMatrix<f64>,
}

impl MlpModel {
    /// Widths `[in, h1, …, out]` with one activation per layer; weights and
    /// biases uniform in ±1/√fan_in.
    pub fn new<R: Rng + ?Sized>(
        widths: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 || activations.len() != widths.len() - 1 {
            return Err(Error::invalid(
                "architecture",
                format!(
                    "{} widths need {} activations, got {}",
                    widths.len(),
                    widths.len().saturating_sub(1),
                    activations.len()
                ),
            ));
        }
        if widths.contains(&0) {
            return Err(Error::invalid("architecture", "zero-width layer"));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let weights = DMatrix::from_fn(w[0], w[1], |_, _| rng.random_range(-bound..=bound));
                let bias = DVector::from_fn(w[1], |_, _| rng.random_range(-bound..=bound));
                Layer {
                    weights,
                    bias,
                    activation,
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Layer::output_dim).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, batch: &DMatrix<f64>) -> Result<ForwardTrace> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::shape(
                "network input",
                self.input_dim(),
                batch.ncols(),
            ));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.clone());
        for layer in &self.layers {
            let prev = activations.last().expect("nonempty");
            let mut z = prev * &layer.weights;
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            layer.activation.apply(&mut z);
            activations.push(z);
        }
        Ok(ForwardTrace { activations })
    }

    pub fn predict(&self, batch: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.forward(batch)?.activations.pop().expect("nonempty"))
    }

    /// Reverse pass given the loss gradient with respect to the output.
    pub fn backward(&self, trace: &ForwardTrace, upstream: &DMatrix<f64>) -> Result<Gradients> {
        let out = trace.output();
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(Error::shape(
                "forward trace length",
                self.layers.len() + 1,
                trace.activations.len(),
            ));
        }
        if upstream.shape() != out.shape() {
            return Err(Error::shape(
                "upstream gradient",
                format!("{}x{}", out.nrows(), out.ncols()),
                format!("{}x{}", upstream.nrows(), upstream.ncols()),
            ));
        }
        let mut grad = upstream.clone();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let g_z = layer.activation.backprop(&trace.activations[i + 1], &grad);
            let a_prev = &trace.activations[i];
            let weights = a_prev.transpose() * &g_z;
            let bias = g_z.row_sum().transpose();
            grad = &g_z * layer.weights.transpose();
            layers.push(LayerGrad { weights, bias });
        }
        layers.reverse();
        Ok(Gradients {
            layers,
            input: grad,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<LayerGrad>,
    pub second_moment: Vec<LayerGrad>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

fn zeros_like(model: &MlpModel) -> Vec<LayerGrad> {
    model
        .layers
        .iter()
        .map(|l| LayerGrad {
            weights: DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
            bias: DVector::zeros(l.bias.len()),
        })
        .collect()
}

impl AdamState {
    pub fn new(model: &MlpModel, lr: f64) -> Self {
        Self {
            first_moment: zeros_like(model),
            second_moment: zeros_like(model),
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != model.layers.len() || self.first_moment.len() != model.layers.len()
        {
            return Err(Error::shape(
                "adam layers",
                model.layers.len(),
                grads.layers.len(),
            ));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, g), m), v) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            if g.weights.shape() != layer.weights.shape() || g.bias.len() != layer.bias.len() {
                return Err(Error::shape(
                    "adam gradient",
                    format!("{:?}", layer.weights.shape()),
                    format!("{:?}", g.weights.shape()),
                ));
            }
            for i in 0..layer.weights.len() {
                update(
                    &mut layer.weights[i],
                    g.weights[i],
                    &mut m.weights[i],
                    &mut v.weights[i],
                );
            }
            for i in 0..layer.bias.len() {
                update(
                    &mut layer.bias[i],
                    g.bias[i],
                    &mut m.bias[i],
                    &mut v.bias[i],
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Stop after this many epochs without validation improvement.
    pub early_stop_patience: Option<usize>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::invalid(
                "lr",
                format!("must be positive, got {}", self.lr),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss after each epoch (empty without validation rows).
    pub val_loss: Vec<f64>,
    /// Epoch whose parameters were restored.
    pub best_epoch: usize,
}

/// Mini-batch Adam training.
///
/// `loss(outputs, rows)` returns the batch loss and its gradient with respect
/// to `outputs`, where `rows` are the dataset row indices of the batch. The
/// best snapshot (by validation loss, or training loss without validation
/// rows) is restored at the end.
pub fn train<L>(
    model: &mut MlpModel,
    inputs: &DMatrix<f64>,
    train_rows: &[usize],
    val_rows: &[usize],
    mut loss: L,
    config: &TrainConfig,
) -> Result<TrainReport>
where
    L: FnMut(&DMatrix<f64>, &[usize]) -> Result<(f64, DMatrix<f64>)>,
{
    config.validate()?;
    if train_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(&bad) = train_rows
        .iter()
        .chain(val_rows)
        .find(|&&r| r >= inputs.nrows())
    {
        return Err(Error::invalid("rows", format!("row {bad} out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(model, config.lr);
    let mut order = train_rows.to_vec();
    let mut report = TrainReport {
        train_loss: Vec::with_capacity(config.epochs),
        val_loss: Vec::new(),
        best_epoch: 0,
    };
    let mut best = (f64::INFINITY, model.clone());
    let mut since_best = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for rows in order.chunks(config.batch_size) {
            let batch = inputs.select_rows(rows);
            let trace = model.forward(&batch)?;
            let (value, grad) = loss(trace.output(), rows)?;
            if !value.is_finite() {
                return Err(Error::NonConvergence {
                    what: "training loss",
                    iterations: epoch,
                    residual: value,
                });
            }
            total += value * rows.len() as f64;
            let grads = model.backward(&trace, &grad)?;
            adam.step(model, &grads)?;
        }
        let epoch_loss = total / order.len() as f64;
        report.train_loss.push(epoch_loss);

        let monitored = if val_rows.is_empty() {
            epoch_loss
        } else {
            let outputs = model.predict(&inputs.select_rows(val_rows))?;
            let (value, _) = loss(&outputs, val_rows)?;
            report.val_loss.push(value);
            value
        };
        if monitored < best.0 {
            best = (monitored, model.clone());
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        log::debug!("epoch {epoch}: train {epoch_loss:.6e}, monitored {monitored:.6e}");
        if config.early_stop_patience.is_some_and(|p| since_best >= p) {
            log::info!(
                "early stop at epoch {epoch}, best epoch {}",
                report.best_epoch
            );
            break;
        }
    }
    *model = best.1;
    Ok(report)
}

/// Softmax cross-entropy: mean loss and its gradient `(p − y)/B` with respect
/// to the logits.
pub fn softmax_cross_entropy(
    logits: &DMatrix<f64>,
    labels: &[usize],
) -> Result<(f64, DMatrix<f64>)> {
    if labels.len() != logits.nrows() {
        return Err(Error::shape("labels", logits.nrows(), labels.len()));
    }
    let mut probs = logits.clone();
    Activation::Softmax.apply(&mut probs);
    let b = labels.len() as f64;
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        if label >= logits.ncols() {
            return Err(Error::invalid(
                "labels",
                format!("class {label} out of range"),
            ));
        }
        loss -= probs[(r, label)].max(1e-300).ln();
        probs[(r, label)] -= 1.0;
    }
    Ok((loss / b, probs / b))
}

const MODEL_MAGIC: &[u8; 8] = b"ISACMLP1";
const MODEL_VERSION: u32 = 1;
/// Decoder guard against absurd headers.
const MAX_LAYERS: u32 = 1024;

impl MlpModel {
    /// Binary layout, little-endian:
    /// magic `ISACMLP1`, u32 version, u32 layer count, then per layer
    /// (u32 in, u32 out, u8 activation tag), then per layer the `in×out`
    /// weights row-major followed by the `out` biases, all f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 9 * self.layers.len() + 8 * self.num_params());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.input_dim() as u32).to_le_bytes());
            out.extend_from_slice(&(l.output_dim() as u32).to_le_bytes());
            out.push(l.activation.tag());
        }
        for l in &self.layers {
            for r in 0..l.weights.nrows() {
                for c in 0..l.weights.ncols() {
                    out.extend_from_slice(&l.weights[(r, c)].to_le_bytes());
                }
            }
            for v in l.bias.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(8)? != MODEL_MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::Decode(format!("unsupported version {version}")));
        }
        let count = r.u32()?;
        if count == 0 || count > MAX_LAYERS {
            return Err(Error::Decode(format!("layer count {count} out of range")));
        }
        let mut shapes = Vec::with_capacity(count as usize);
        let mut expected_values: u64 = 0;
        for i in 0..count {
            let input = r.u32()? as usize;
            let output = r.u32()? as usize;
            let tag = r.u8()?;
            let activation = Activation::from_tag(tag)
                .ok_or_else(|| Error::Decode(format!("unknown activation tag {tag}")))?;
            if input == 0 || output == 0 {
                return Err(Error::Decode(format!("layer {i} has zero width")));
            }
            if let Some(&(_, prev_out, _)) = shapes.last() {
                if prev_out != input {
                    return Err(Error::Decode(format!(
                        "layer {i} input {input} does not chain from {prev_out}"
                    )));
                }
            }
            expected_values = expected_values
                .checked_add((input as u64) * (output as u64) + output as u64)
                .ok_or_else(|| Error::Decode("parameter count overflow".into()))?;
            shapes.push((input, output, activation));
        }
        if expected_values.checked_mul(8) != Some(r.remaining() as u64) {
            return Err(Error::Decode(format!(
                "expected {expected_values} parameters, found {} bytes",
                r.remaining()
            )));
        }
        let mut layers = Vec::with_capacity(shapes.len());
        for (input, output, activation) in shapes {
            let mut weights = DMatrix::zeros(input, output);
            for row in 0..input {
                for col in 0..output {
                    weights[(row, col)] = r.f64()?;
                }
            }
            let mut bias = DVector::zeros(output);
            for v in bias.iter_mut() {
                *v = r.f64()?;
            }
            layers.push(Layer {
                weights,
                bias,
                activation,
            });
        }
        let model = MlpModel { layers };
        if !model.is_finite() {
            return Err(Error::Decode("non-finite parameter".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Bounds-checked little-endian reader shared by the binary decoders.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Decode(format!(
                "truncated input at byte {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    fn random_batch(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_relu_network_outputs_zero() {
        let mut model = MlpModel::new(
            &[3, 4, 2],
            &[Activation::Relu, Activation::Relu],
            &mut rng(),
        )
        .unwrap();
        for l in &mut model.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let out = model.predict(&random_batch(5, 3, &mut rng())).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_linear_layer() {
        let model = MlpModel {
            layers: vec![Layer {
                weights: DMatrix::identity(3, 3),
                bias: DVector::zeros(3),
                activation: Activation::Linear,
            }],
        };
        let x = random_batch(4, 3, &mut rng());
        assert_eq!(model.predict(&x).unwrap(), x);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let model = MlpModel::new(&[3, 6], &[Activation::Softmax], &mut rng()).unwrap();
        let out = model
            .predict(&(random_batch(7, 3, &mut rng()) * 50.0))
            .unwrap();
        for row in out.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_squared_loss_gradient_closed_form() {
        let mut r = rng();
        let model = MlpModel::new(&[3, 2], &[Activation::Linear], &mut r).unwrap();
        let x = random_batch(6, 3, &mut r);
        let y = random_batch(6, 2, &mut r);
        let trace = model.forward(&x).unwrap();
        let b = x.nrows() as f64;
        let upstream = (trace.output() - &y) * (2.0 / b);
        let grads = model.backward(&trace, &upstream).unwrap();
        let mut pred = &x * &model.layers[0].weights;
        for mut row in pred.row_iter_mut() {
            row += model.layers[0].bias.transpose();
        }
        let expected = x.transpose() * (pred - &y) * (2.0 / b);
        assert!((&grads.layers[0].weights - expected).norm() < 1e-12);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut r = rng();
        let model =
            MlpModel::new(&[3, 4, 2], &[Activation::Tanh, Activation::Sigmoid], &mut r).unwrap();
        let x = random_batch(5, 3, &mut r);
        let trace = model.forward(&x).unwrap();
        let grads = model.backward(&trace, &DMatrix::zeros(5, 2)).unwrap();
        assert!(grads
            .layers
            .iter()
            .all(|g| g.weights.norm() == 0.0 && g.bias.norm() == 0.0));
        assert!(model.backward(&trace, &DMatrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn softmax_cross_entropy_gradient_is_p_minus_y() {
        let mut r = rng();
        let logits = random_batch(4, 5, &mut r);
        let labels = [0usize, 3, 4, 1];
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        let mut p = logits.clone();
        Activation::Softmax.apply(&mut p);
        // Routing -y/p (the gradient of -Σ y ln p) through the softmax
        // Jacobian must give the same result.
        let mut upstream = DMatrix::zeros(4, 5);
        for (i, &l) in labels.iter().enumerate() {
            upstream[(i, l)] = -1.0 / p[(i, l)] / 4.0;
        }
        let via_jacobian = Activation::Softmax.backprop(&p, &upstream);
        assert!((&grad - &via_jacobian).norm() < 1e-12);
        for (i, &l) in labels.iter().enumerate() {
            for c in 0..5 {
                let y = if c == l { 1.0 } else { 0.0 };
                assert!((grad[(i, c)] - (p[(i, c)] - y) / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut r = rng();
        let mut model = MlpModel::new(&[2, 3], &[Activation::Tanh], &mut r).unwrap();
        let before = model.clone();
        let mut adam = AdamState::new(&model, 0.1);
        let zero = Gradients {
            layers: zeros_like(&model),
            input: DMatrix::zeros(1, 2),
        };
        adam.step(&mut model, &zero).unwrap();
        assert_eq!(model, before);
        assert_eq!(adam.step_count, 1);
    }

    #[test]
    fn adam_constant_gradient_step_tends_to_lr() {
        // Scalar recurrence: with constant g the bias-corrected ratio
        // m̂/√v̂ is exactly sign(g) (up to eps), so each step moves by lr.
        let mut model = MlpModel {
            layers: vec![Layer {
                weights: DMatrix::from_element(1, 1, 0.0),
                bias: DVector::zeros(1),
                activation: Activation::Linear,
            }],
        };
        let mut adam = AdamState::new(&model, 0.01);
        let g = Gradients {
            layers: vec![LayerGrad {
                weights: DMatrix::from_element(1, 1, 3.0),
                bias: DVector::zeros(1),
            }],
            input: DMatrix::zeros(1, 1),
        };
        let mut prev = 0.0;
        for _ in 0..200 {
            adam.step(&mut model, &g).unwrap();
            let w = model.layers[0].weights[(0, 0)];
            assert!(((prev - w) - 0.01).abs() < 1e-8);
            prev = w;
        }
        assert_eq!(adam.step_count, 200);
    }

    #[test]
    fn train_fits_linear_target() {
        let mut r = rng();
        let x = random_batch(64, 3, &mut r);
        let true_w = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 0.3, -1.5, 2.0]);
        let y = &x * &true_w;
        let mut model = MlpModel::new(&[3, 2], &[Activation::Linear], &mut r).unwrap();
        let rows: Vec<usize> = (0..64).collect();
        let config = TrainConfig {
            epochs: 2000,
            batch_size: 16,
            lr: 0.01,
            early_stop_patience: None,
            seed: 1,
        };
        let mse = |out: &DMatrix<f64>, rows: &[usize]| {
            let diff = out - y.select_rows(rows);
            let b = rows.len() as f64;
            Ok((diff.norm_squared() / b, diff * (2.0 / b)))
        };
        let report = train(&mut model, &x, &rows, &[], mse, &config).unwrap();
        assert!(
            report.train_loss[report.best_epoch] < 1e-6,
            "{}",
            report.train_loss[report.best_epoch]
        );
    }

    #[test]
    fn train_at_optimum_is_stationary() {
        let mut r = rng();
        let x = random_batch(10, 2, &mut r);
        let mut model = MlpModel::new(&[2, 2], &[Activation::Linear], &mut r).unwrap();
        let before = model.clone();
        let zero_loss =
            |out: &DMatrix<f64>, _: &[usize]| Ok((0.0, DMatrix::zeros(out.nrows(), out.ncols())));
        let rows: Vec<usize> = (0..10).collect();
        let config = TrainConfig {
            epochs: 5,
            batch_size: 4,
            lr: 0.1,
            early_stop_patience: Some(2),
            seed: 0,
        };
        train(&mut model, &x, &rows, &[], zero_loss, &config).unwrap();
        assert_eq!(model, before);
        assert!(train(&mut model, &x, &[], &[], zero_loss, &config).is_err());
    }

    #[test]
    fn byte_round_trip_is_exact() {
        let model = MlpModel::new(
            &[4, 7, 3],
            &[Activation::Relu, Activation::Softmax],
            &mut rng(),
        )
        .unwrap();
        let bytes = model.to_bytes();
        assert_eq!(MlpModel::from_bytes(&bytes).unwrap(), model);
        assert!(MlpModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(MlpModel::from_bytes(&bad).is_err());
    }
}
