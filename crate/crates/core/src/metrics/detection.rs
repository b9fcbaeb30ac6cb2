use num_complex::Complex64;
use rand::Rng;

use crate::channel::{steering_vector, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, frob_sq, require_positive, require_shape, CMat};

/// Detection/false-alarm pairs over a shared, ascending threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub pfa: Vec<f64>,
    pub pd: Vec<f64>,
}

impl RocCurve {
    /// Detection probability at a false-alarm rate, linearly interpolated
    /// between neighbouring curve points.
    pub fn pd_at(&self, pfa: f64) -> f64 {
        // pfa is nonincreasing along the threshold grid; walk from the tail.
        let n = self.pfa.len();
        for i in (1..n).rev() {
            let (p_hi, p_lo) = (self.pfa[i - 1], self.pfa[i]);
            if p_lo <= pfa && pfa <= p_hi {
                if p_hi - p_lo < 1e-15 {
                    return self.pd[i - 1].max(self.pd[i]);
                }
                let w = (pfa - p_lo) / (p_hi - p_lo);
                return self.pd[i] + w * (self.pd[i - 1] - self.pd[i]);
            }
        }
        if pfa >= self.pfa[0] {
            self.pd[0]
        } else {
            self.pd[n - 1]
        }
    }
}

/// Unknown-amplitude GLRT for a target at `target_angle`.
///
/// With probing sequence `s = v(θ)ᴴ X` (the waveform as seen from θ) the
/// statistic is `|v(θ)ᴴ Z sᴴ|² / (σ² ‖v‖² ‖s‖²)`, which is Exp(1) under H0.
pub fn glrt_statistic(
    echo: &CMat,
    target_angle: f64,
    x: &CMat,
    noise_var: f64,
    geom: &ArrayGeometry,
) -> Result<f64> {
    require_positive("noise_var", noise_var)?;
    let m = geom.num_antennas();
    require_shape("waveform X", x, m, x.ncols())?;
    require_shape("echo Z", echo, m, x.ncols())?;
    let v = steering_vector(target_angle, geom);
    let s = x.adjoint() * &v; // sᴴ as a column: (vᴴ X)ᴴ = Xᴴ v
    let s_energy = s.norm_squared();
    // Relative to the total waveform energy so that a null toward θ counts.
    if s_energy <= f64::EPSILON * frob_sq(x) * v.norm_squared() {
        return Err(Error::ZeroProbingEnergy);
    }
    let projected = v.adjoint() * echo * &s;
    Ok(projected[(0, 0)].norm_sqr() / (noise_var * v.norm_squared() * s_energy))
}

/// Monostatic echo `α v(θ) (v(θ)ᴴ X) + N` with `N` entries CN(0, σ²).
pub fn synthesize_echo<R: Rng + ?Sized>(
    x: &CMat,
    target_angle: f64,
    amplitude: Complex64,
    noise_var: f64,
    geom: &ArrayGeometry,
    rng: &mut R,
) -> CMat {
    let v = steering_vector(target_angle, geom);
    let probe = v.adjoint() * x;
    let mut z = &v * probe * amplitude;
    let sigma = noise_var.sqrt();
    for c in 0..z.ncols() {
        for r in 0..z.nrows() {
            z[(r, c)] += complex_gaussian(rng) * sigma;
        }
    }
    z
}

fn exceedance(samples: &[f64], threshold: f64) -> f64 {
    samples.iter().filter(|&&s| s > threshold).count() as f64 / samples.len() as f64
}

/// Empirical ROC. The first threshold is −∞ (point (1, 1)) and the last is
/// the largest observed statistic (point (0, 0)).
pub fn roc_curve(stats_h0: &[f64], stats_h1: &[f64], num_thresholds: usize) -> Result<RocCurve> {
    if stats_h0.is_empty() || stats_h1.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if num_thresholds < 2 {
        return Err(Error::invalid("num_thresholds", "need at least 2"));
    }
    let (lo, hi) = stats_h0
        .iter()
        .chain(stats_h1)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    let mut thresholds = Vec::with_capacity(num_thresholds);
    thresholds.push(f64::NEG_INFINITY);
    let steps = num_thresholds - 1;
    for i in 1..=steps {
        thresholds.push(lo + (hi - lo) * i as f64 / steps as f64);
    }
    // Exceedance counts via sorted samples keep this O(n log n).
    let mut h0 = stats_h0.to_vec();
    let mut h1 = stats_h1.to_vec();
    h0.sort_by(f64::total_cmp);
    h1.sort_by(f64::total_cmp);
    let frac_above = |sorted: &[f64], t: f64| {
        let below = sorted.partition_point(|&s| s <= t);
        (sorted.len() - below) as f64 / sorted.len() as f64
    };
    let pfa = thresholds.iter().map(|&t| frac_above(&h0, t)).collect();
    let pd = thresholds.iter().map(|&t| frac_above(&h1, t)).collect();
    Ok(RocCurve {
        thresholds,
        pfa,
        pd,
    })
}

/// Smallest threshold whose empirical false-alarm rate does not exceed `pfa`.
pub fn threshold_for_pfa(stats_h0: &[f64], pfa: f64) -> Result<f64> {
    if stats_h0.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&pfa) {
        return Err(Error::invalid("pfa", format!("{pfa} outside [0, 1]")));
    }
    let mut sorted = stats_h0.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let allowed = (pfa * sorted.len() as f64).floor() as usize;
    if allowed >= sorted.len() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(sorted[allowed])
}

/// Detection probability with the threshold set from the H0 quantile.
pub fn pd_at_pfa(stats_h0: &[f64], stats_h1: &[f64], pfa: f64) -> Result<f64> {
    if stats_h1.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let t = threshold_for_pfa(stats_h0, pfa)?;
    Ok(exceedance(stats_h1, t))
}
