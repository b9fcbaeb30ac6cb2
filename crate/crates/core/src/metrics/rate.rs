use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frob_sq, require_positive, require_shape, CMat, CVec};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Per-user SINRs (linear) and their achievable sum rate in bits per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user_sinr: Vec<f64>,
    pub sum_rate: f64,
}

impl RateReport {
    pub fn from_sinr(per_user_sinr: Vec<f64>) -> Self {
        let sum_rate = sum_rate(&per_user_sinr);
        Self {
            per_user_sinr,
            sum_rate,
        }
    }
}

fn check_waveform_dims(h: &CMat, x: &CMat, d: &CMat) -> Result<()> {
    require_shape("waveform X", x, h.ncols(), d.ncols())?;
    require_shape("desired symbols D", d, h.nrows(), x.ncols())
}

/// Multi-user interference energy `‖HX − D‖_F²`.
pub fn mui_power(h: &CMat, x: &CMat, d: &CMat) -> Result<f64> {
    check_waveform_dims(h, x, d)?;
    Ok(frob_sq(&(h * x - d)))
}

/// SINR of every user with the symbol expectations realized as averages
/// over the frame columns. D is assumed drawn from a unit-energy alphabet.
pub fn per_user_sinr(h: &CMat, x: &CMat, d: &CMat, noise_var: f64) -> Result<Vec<f64>> {
    check_waveform_dims(h, x, d)?;
    require_positive("noise_var", noise_var)?;
    let tau = x.ncols() as f64;
    let residual = h * x - d;
    Ok((0..h.nrows())
        .map(|k| {
            let signal = d.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() / tau;
            let mui = residual.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() / tau;
            signal / (mui + noise_var)
        })
        .collect())
}

/// `Σ_k log2(1 + γ_k)`.
pub fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|g| (1.0 + g).log2()).sum()
}

/// Hybrid-beamforming sum rate in nats: `Σ_k ln(1 + |h_kᴴ F w_k|² / (Σ_{j≠k} |h_kᴴ F w_j|² + σ²))`.
pub fn hybrid_sum_rate(channels: &[CVec], f: &CMat, w: &CMat, noise_var: f64) -> Result<f64> {
    require_positive("noise_var", noise_var)?;
    if channels.len() != w.ncols() {
        return Err(Error::shape(
            "hybrid_sum_rate users",
            w.ncols(),
            channels.len(),
        ));
    }
    if f.ncols() != w.nrows() {
        return Err(Error::shape(
            "hybrid_sum_rate RF chains",
            f.ncols(),
            w.nrows(),
        ));
    }
    let fw = f * w;
    let mut rate = 0.0;
    for (k, h) in channels.iter().enumerate() {
        if h.len() != f.nrows() {
            return Err(Error::shape("hybrid_sum_rate antennas", f.nrows(), h.len()));
        }
        // Row vector h_kᴴ F W: entry j is the gain of stream j at user k.
        let gains: Vec<Complex64> = (0..w.ncols()).map(|j| h.dotc(&fw.column(j))).collect();
        let signal = gains[k].norm_sqr();
        let interference: f64 = gains
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, g)| g.norm_sqr())
            .sum();
        rate += (1.0 + signal / (interference + noise_var)).ln();
    }
    Ok(rate)
}
