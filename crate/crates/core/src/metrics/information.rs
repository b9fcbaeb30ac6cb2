use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::complex_gaussian;

pub const DEFAULT_HERMITE_ORDER: usize = 20;

/// Alphabets above this size switch from the tensor quadrature grid to
/// Monte-Carlo integration.
const QUADRATURE_MAX_POINTS: usize = 64;
const MONTE_CARLO_SAMPLES: usize = 1_000_000;
const MONTE_CARLO_SEED: u64 = 0x15ac_d00d;

/// Channel input law for `Y = √γ X + N`, `N ~ CN(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputDistribution {
    Gaussian,
    Discrete {
        points: Vec<Complex64>,
        probs: Vec<f64>,
    },
}

impl InputDistribution {
    /// Equiprobable alphabet; fails unless its average power is one.
    pub fn uniform(points: Vec<Complex64>) -> Result<Self> {
        let n = points.len();
        let probs = vec![1.0 / n as f64; n];
        let dist = InputDistribution::Discrete { points, probs };
        dist.validate()?;
        Ok(dist)
    }

    pub fn bpsk() -> Self {
        Self::psk(2, 0.0)
    }

    pub fn qpsk() -> Self {
        Self::psk(4, std::f64::consts::FRAC_PI_4)
    }

    pub fn psk(order: usize, offset: f64) -> Self {
        let points = (0..order)
            .map(|i| {
                Complex64::from_polar(
                    1.0,
                    offset + 2.0 * std::f64::consts::PI * i as f64 / order as f64,
                )
            })
            .collect();
        let probs = vec![1.0 / order as f64; order];
        InputDistribution::Discrete { points, probs }
    }

    pub fn validate(&self) -> Result<()> {
        let InputDistribution::Discrete { points, probs } = self else {
            return Ok(());
        };
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::invalid(
                "constellation",
                format!("{} points with {} probabilities", points.len(), probs.len()),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "constellation",
                "probabilities must sum to one",
            ));
        }
        let power: f64 = points
            .iter()
            .zip(probs)
            .map(|(x, p)| p * x.norm_sqr())
            .sum();
        if (power - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(power));
        }
        Ok(())
    }
}

/// Mutual information (nats) and MMSE at linear SNR γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiMmsePoint {
    pub snr: f64,
    pub mutual_info: f64,
    pub mmse: f64,
}

/// Nodes and weights of the n-point Gauss–Hermite rule for `∫ e^{-t²} f(t) dt`
/// (Golub–Welsch).
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn awgn_mi_mmse(input: &InputDistribution, snr: f64) -> Result<MiMmsePoint> {
    awgn_mi_mmse_with_order(input, snr, DEFAULT_HERMITE_ORDER)
}

pub fn awgn_mi_mmse_with_order(
    input: &InputDistribution,
    snr: f64,
    order: usize,
) -> Result<MiMmsePoint> {
    check_snr(snr)?;
    if order == 0 {
        return Err(Error::invalid("order", "must be positive"));
    }
    input.validate()?;
    let (points, probs) = match input {
        InputDistribution::Gaussian => return Ok(gaussian_point(snr)),
        InputDistribution::Discrete { points, probs } => (points, probs),
    };
    if points.len() > QUADRATURE_MAX_POINTS {
        return awgn_mi_mmse_monte_carlo(input, snr, MONTE_CARLO_SAMPLES, MONTE_CARLO_SEED);
    }
    let (nodes, weights) = gauss_hermite(order);
    let mut kernel = PosteriorKernel::new(points, probs, snr);
    let mut info = 0.0;
    let mut mmse = 0.0;
    for (i, &p_i) in probs.iter().enumerate() {
        if p_i == 0.0 {
            continue;
        }
        for (a, &ta) in nodes.iter().enumerate() {
            for (b, &tb) in nodes.iter().enumerate() {
                let w = p_i * weights[a] * weights[b] / std::f64::consts::PI;
                let (log_ratio, err) = kernel.eval(i, Complex64::new(ta, tb));
                info += w * log_ratio;
                mmse += w * err;
            }
        }
    }
    Ok(finish(snr, info, mmse))
}

/// Sample-average version of the same integrals, deterministic given `seed`.
pub fn awgn_mi_mmse_monte_carlo(
    input: &InputDistribution,
    snr: f64,
    samples: usize,
    seed: u64,
) -> Result<MiMmsePoint> {
    check_snr(snr)?;
    input.validate()?;
    if samples == 0 {
        return Err(Error::invalid("samples", "must be positive"));
    }
    let (points, probs) = match input {
        InputDistribution::Gaussian => return Ok(gaussian_point(snr)),
        InputDistribution::Discrete { points, probs } => (points, probs),
    };
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut kernel = PosteriorKernel::new(points, probs, snr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut info = 0.0;
    let mut mmse = 0.0;
    for _ in 0..samples {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cumulative
            .partition_point(|&c| c <= u)
            .min(points.len() - 1);
        let n = complex_gaussian(&mut rng);
        let (log_ratio, err) = kernel.eval(i, n);
        info += log_ratio;
        mmse += err;
    }
    let n = samples as f64;
    Ok(finish(snr, info / n, mmse / n))
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::invalid(
            "snr",
            format!("must be finite and nonnegative, got {snr}"),
        ));
    }
    Ok(())
}

fn gaussian_point(snr: f64) -> MiMmsePoint {
    MiMmsePoint {
        snr,
        mutual_info: snr.ln_1p(),
        mmse: 1.0 / (1.0 + snr),
    }
}

fn finish(snr: f64, info: f64, mmse: f64) -> MiMmsePoint {
    MiMmsePoint {
        snr,
        mutual_info: info.max(0.0),
        mmse: mmse.clamp(0.0, 1.0),
    }
}

struct PosteriorKernel<'a> {
    points: &'a [Complex64],
    log_probs: Vec<f64>,
    amp: f64,
    exponents: Vec<f64>,
}

impl<'a> PosteriorKernel<'a> {
    fn new(points: &'a [Complex64], probs: &[f64], snr: f64) -> Self {
        Self {
            points,
            log_probs: probs.iter().map(|p| p.ln()).collect(),
            amp: snr.sqrt(),
            exponents: vec![0.0; points.len()],
        }
    }

    /// For input index `i` and noise `n`: the log-likelihood ratio
    /// `ln p(y|x_i)/p(y)` and the squared error of the posterior mean.
    fn eval(&mut self, i: usize, n: Complex64) -> (f64, f64) {
        let xi = self.points[i];
        let mut max_e = f64::NEG_INFINITY;
        let e = &mut self.exponents;
        for (j, xj) in self.points.iter().enumerate() {
            let d = n + (xi - xj) * self.amp;
            e[j] = self.log_probs[j] - d.norm_sqr();
            max_e = max_e.max(e[j]);
        }
        let mut denom = 0.0;
        let mut mean = Complex64::new(0.0, 0.0);
        for (j, xj) in self.points.iter().enumerate() {
            let w = (e[j] - max_e).exp();
            denom += w;
            mean += xj * w;
        }
        let lse = max_e + denom.ln();
        mean /= denom;
        (-n.norm_sqr() - lse, (xi - mean).norm_sqr())
    }
}
