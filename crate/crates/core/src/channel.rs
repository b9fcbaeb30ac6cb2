//! Propagation models: ULA steering vectors, Rician and Rayleigh user
//! channels, and first-order channel aging under user mobility.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, CMat, CVec};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform linear array: element count and spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_antennas: usize,
    spacing: f64,
}

impl ArrayGeometry {
    pub fn new(num_antennas: usize, spacing: f64) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::invalid("num_antennas", "must be at least 1"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::invalid(
                "spacing",
                format!("must be positive, got {spacing}"),
            ));
        }
        Ok(Self {
            num_antennas,
            spacing,
        })
    }

    /// Half-wavelength array, the configuration used throughout the experiments.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, 0.5)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Per-user Rician channel description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    pub rician_factor: f64,
    /// Linear large-scale gain (path loss and shadowing).
    pub large_scale_gain: f64,
    pub departure_angle: f64,
}

impl RicianParams {
    pub fn new(rician_factor: f64, large_scale_gain: f64, departure_angle: f64) -> Result<Self> {
        let p = Self {
            rician_factor,
            large_scale_gain,
            departure_angle,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rician_factor >= 0.0) || self.rician_factor.is_nan() {
            return Err(Error::invalid("rician_factor", "must be nonnegative"));
        }
        if !(self.large_scale_gain > 0.0) || !self.large_scale_gain.is_finite() {
            return Err(Error::invalid("large_scale_gain", "must be positive"));
        }
        if !(-PI / 2.0..=PI / 2.0).contains(&self.departure_angle) {
            return Err(Error::invalid(
                "departure_angle",
                "must lie in [-pi/2, pi/2]",
            ));
        }
        Ok(())
    }

    /// Weights (LoS, scattered) applied to the steering and Gaussian parts.
    fn weights(&self) -> (f64, f64) {
        let k = self.rician_factor;
        let eta = self.large_scale_gain;
        if k.is_infinite() {
            return (eta.sqrt(), 0.0);
        }
        ((k * eta / (k + 1.0)).sqrt(), (eta / (k + 1.0)).sqrt())
    }
}

/// Log-distance path loss `(d / 1 m)^(-exponent)`.
///
/// Stand-in for a tabulated urban-microcell model; the exponent defaults to 3
/// in the experiment configs.
pub fn path_loss_gain(distance_m: f64, exponent: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::invalid("distance", "must be positive"));
    }
    Ok(distance_m.powf(-exponent))
}

/// `v(θ)[m] = exp(j 2π Δ m sin θ)` for m = 0..M-1.
pub fn steering_vector(theta: f64, geom: &ArrayGeometry) -> CVec {
    let phase_step = 2.0 * PI * geom.spacing * theta.sin();
    DVector::from_iterator(
        geom.num_antennas,
        (0..geom.num_antennas).map(|m| Complex64::from_polar(1.0, phase_step * m as f64)),
    )
}

pub fn sample_user_channel<R: Rng + ?Sized>(
    params: &RicianParams,
    geom: &ArrayGeometry,
    rng: &mut R,
) -> CVec {
    let (los_w, nlos_w) = params.weights();
    let los = steering_vector(params.departure_angle, geom);
    DVector::from_iterator(
        geom.num_antennas,
        los.iter()
            .map(|&l| l * los_w + complex_gaussian(rng) * nlos_w),
    )
}

/// K×M channel matrix whose k-th row is `h_kᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMat,
    pub per_user_params: Vec<RicianParams>,
}

impl ChannelMatrix {
    pub fn num_users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.entries.ncols()
    }

    /// Channel vector of user k (the transpose of row k).
    pub fn user(&self, k: usize) -> CVec {
        self.entries.row(k).transpose()
    }
}

pub fn sample_channel_matrix<R: Rng + ?Sized>(
    users: &[RicianParams],
    geom: &ArrayGeometry,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    if users.is_empty() {
        return Err(Error::NoUsers);
    }
    let mut entries = CMat::zeros(users.len(), geom.num_antennas);
    for (k, p) in users.iter().enumerate() {
        p.validate()?;
        let h = sample_user_channel(p, geom, rng);
        entries.set_row(k, &h.transpose());
    }
    Ok(ChannelMatrix {
        entries,
        per_user_params: users.to_vec(),
    })
}

pub fn sample_rayleigh<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CVec> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    Ok(DVector::from_iterator(
        dim,
        (0..dim).map(|_| complex_gaussian(rng)),
    ))
}

/// Mobility description for one aging step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgingParams {
    pub user_speed: f64,
    pub carrier_freq: f64,
    pub sample_period: f64,
    /// Common LoS phase rotation; drawn uniformly on [-π, π] when `None`.
    pub mobility_phase: Option<f64>,
}

impl AgingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.user_speed >= 0.0) {
            return Err(Error::invalid("user_speed", "must be nonnegative"));
        }
        if !(self.carrier_freq > 0.0) {
            return Err(Error::invalid("carrier_freq", "must be positive"));
        }
        if !(self.sample_period > 0.0) {
            return Err(Error::invalid("sample_period", "must be positive"));
        }
        if let Some(p) = self.mobility_phase {
            if !(-PI..=PI).contains(&p) {
                return Err(Error::invalid("mobility_phase", "must lie in [-pi, pi]"));
            }
        }
        Ok(())
    }

    pub fn doppler(&self) -> f64 {
        self.user_speed * self.carrier_freq / SPEED_OF_LIGHT
    }
}

/// Zeroth-order Bessel function of the first kind.
///
/// Power series below |x| = 8, Hankel asymptotic expansion above.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 8.0 {
        let q = -(x * x) / 4.0;
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut k = 1.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) || k < 4.0 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
            if k > 200.0 {
                break;
            }
        }
        sum
    } else {
        // a_k = Π_{i≤k} (-(2i-1)²) / (k! 8^k), divided by x^k.
        let mut p = 0.0;
        let mut q = 0.0;
        let mut term = 1.0;
        let mut prev_mag = f64::INFINITY;
        for k in 0..40u32 {
            if k > 0 {
                let odd = (2 * k - 1) as f64;
                term *= -(odd * odd) / (k as f64 * 8.0 * x);
            }
            let mag = term.abs();
            if mag > prev_mag {
                break;
            }
            prev_mag = mag;
            // P collects (-1)^(k/2) a_k x^-k over even k, Q (-1)^((k-1)/2) a_k x^-k over odd k.
            match k % 4 {
                0 => p += term,
                1 => q += term,
                2 => p -= term,
                _ => q -= term,
            }
        }
        let chi = x - PI / 4.0;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Jakes temporal correlation `J0(2π f_D T_s)`.
pub fn jakes_correlation(aging: &AgingParams) -> Result<f64> {
    aging.validate()?;
    Ok(bessel_j0(2.0 * PI * aging.doppler() * aging.sample_period))
}

/// Advance a Rician channel by one sampling period.
///
/// `prev` must have been drawn for `params` (its LoS part is assumed to be the
/// unrotated steering vector). The LoS part is rotated by the mobility phase
/// and the scattered part follows a first-order Gauss-Markov update with
/// correlation `chi`.
pub fn age_channel_with<R: Rng + ?Sized>(
    prev: &CVec,
    params: &RicianParams,
    geom: &ArrayGeometry,
    chi: f64,
    mobility_phase: f64,
    rng: &mut R,
) -> Result<CVec> {
    if !(chi.abs() <= 1.0) {
        return Err(Error::InvalidCorrelation(chi));
    }
    if prev.len() != geom.num_antennas {
        return Err(Error::shape("age_channel", geom.num_antennas, prev.len()));
    }
    let (los_w, nlos_w) = params.weights();
    let los = steering_vector(params.departure_angle, geom);
    let rotation = Complex64::from_polar(1.0, mobility_phase);
    let innovation_w = (1.0 - chi * chi).max(0.0).sqrt();
    let out = DVector::from_iterator(
        prev.len(),
        prev.iter().zip(los.iter()).map(|(&h, &l)| {
            let los_part = l * los_w;
            let fresh = complex_gaussian(rng);
            if nlos_w == 0.0 {
                return los_part * rotation;
            }
            let scattered = (h - los_part) / nlos_w;
            los_part * rotation + (scattered * chi + fresh * innovation_w) * nlos_w
        }),
    );
    Ok(out)
}

pub fn age_channel<R: Rng + ?Sized>(
    prev: &CVec,
    params: &RicianParams,
    geom: &ArrayGeometry,
    aging: &AgingParams,
    rng: &mut R,
) -> Result<CVec> {
    let chi = jakes_correlation(aging)?;
    let phase = match aging.mobility_phase {
        Some(p) => p,
        None => rng.random_range(-PI..=PI),
    };
    age_channel_with(prev, params, geom, chi, phase, rng)
}

/// Age every row of a channel matrix with independent mobility phases.
pub fn age_channel_matrix<R: Rng + ?Sized>(
    prev: &ChannelMatrix,
    geom: &ArrayGeometry,
    aging: &AgingParams,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    let mut entries = prev.entries.clone();
    for (k, p) in prev.per_user_params.iter().enumerate() {
        let h = age_channel(&prev.user(k), p, geom, aging, rng)?;
        entries.set_row(k, &h.transpose());
    }
    Ok(ChannelMatrix {
        entries,
        per_user_params: prev.per_user_params.clone(),
    })
}
