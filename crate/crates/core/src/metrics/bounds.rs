use crate::error::{Error, Result};
use crate::linalg::require_positive;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Modified Cramér–Rao bound on phase estimation from `L` observations.
pub fn mcrb_phase(es_over_n0: f64, num_samples: usize) -> Result<f64> {
    require_positive("es_over_n0", es_over_n0)?;
    if num_samples == 0 {
        return Err(Error::invalid("num_samples", "must be at least 1"));
    }
    Ok(1.0 / (2.0 * es_over_n0 * num_samples as f64))
}

/// Modified Cramér–Rao bound on normalized frequency estimation.
pub fn mcrb_freq(es_over_n0: f64, num_samples: usize) -> Result<f64> {
    require_positive("es_over_n0", es_over_n0)?;
    if num_samples < 2 {
        return Err(Error::invalid(
            "num_samples",
            "frequency bound needs at least 2 samples",
        ));
    }
    let l = num_samples as f64;
    Ok(3.0 / (2.0 * es_over_n0 * std::f64::consts::PI.powi(2) * l * (l * l - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarResolution {
    /// Metres.
    pub range: f64,
    /// Metres per second.
    pub velocity: f64,
    /// Radians.
    pub angle: f64,
}

pub fn radar_resolutions(
    bandwidth: f64,
    wavelength: f64,
    pulses: usize,
    pri: f64,
    aperture: f64,
) -> Result<RadarResolution> {
    require_positive("bandwidth", bandwidth)?;
    require_positive("wavelength", wavelength)?;
    require_positive("pri", pri)?;
    require_positive("aperture", aperture)?;
    if pulses == 0 {
        return Err(Error::invalid("pulses", "must be at least 1"));
    }
    Ok(RadarResolution {
        range: SPEED_OF_LIGHT / (2.0 * bandwidth),
        velocity: wavelength / (2.0 * pulses as f64 * pri),
        angle: 0.886 * wavelength / aperture,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationBounds {
    /// Lower bound on `I(Y; θ)` in bits.
    pub mi_lower_bound: f64,
    /// Bits needed to reach distortion `D`.
    pub rate_from_distortion: f64,
}

/// Information needed to estimate a parameter of prior variance `P` with
/// mean-square distortion `D`.
pub fn estimation_rate_bounds(prior_var: f64, distortion: f64) -> Result<EstimationBounds> {
    require_positive("prior_var", prior_var)?;
    require_positive("distortion", distortion)?;
    let mut mi = 0.5 * (prior_var / distortion).log2();
    if mi < 0.0 {
        log::warn!(
            "distortion {distortion} exceeds prior variance {prior_var}; bound clamped at 0"
        );
        mi = 0.0;
    }
    Ok(EstimationBounds {
        mi_lower_bound: mi,
        rate_from_distortion: -distortion.log2(),
    })
}
