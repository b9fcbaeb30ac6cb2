use num_complex::Complex64;

use crate::channel::{steering_vector, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, CMat};

/// Transmit power toward each angle of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternCurve {
    /// Radians.
    pub angles: Vec<f64>,
    /// Linear power.
    pub gains: Vec<f64>,
}

impl BeampatternCurve {
    /// Indices of interior local maxima, strongest first.
    pub fn local_maxima(&self) -> Vec<usize> {
        let g = &self.gains;
        let mut peaks: Vec<usize> = (0..g.len())
            .filter(|&i| {
                let left = i == 0 || g[i] > g[i - 1];
                let right = i + 1 == g.len() || g[i] >= g[i + 1];
                left && right
            })
            .collect();
        peaks.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
        peaks
    }

    /// Angles of the `n` strongest local maxima, sorted ascending.
    pub fn peak_angles(&self, n: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .local_maxima()
            .into_iter()
            .take(n)
            .map(|i| self.angles[i])
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn argmax(&self) -> Option<usize> {
        (0..self.gains.len()).max_by(|&a, &b| self.gains[a].total_cmp(&self.gains[b]))
    }
}

/// Uniform grid in degrees from `start` to `end` inclusive, returned in radians.
pub fn angle_grid_deg(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || end < start {
        return Err(Error::invalid(
            "angle grid",
            format!("[{start}, {end}] step {step}"),
        ));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| (start + i as f64 * step).to_radians())
        .collect())
}

/// `X Xᴴ / τ` with τ the number of columns of X.
pub fn waveform_covariance(x: &CMat) -> Result<CMat> {
    let tau = x.ncols();
    if tau == 0 {
        return Err(Error::invalid("waveform", "has no columns"));
    }
    let cov = x * x.adjoint() / Complex64::new(tau as f64, 0.0);
    Ok(hermitian_part(&cov))
}

pub fn transmit_beampattern(
    cov: &CMat,
    angles: &[f64],
    geom: &ArrayGeometry,
) -> Result<BeampatternCurve> {
    let m = geom.num_antennas();
    if cov.nrows() != m || cov.ncols() != m {
        return Err(Error::shape(
            "beampattern covariance",
            format!("{m}x{m}"),
            format!("{}x{}", cov.nrows(), cov.ncols()),
        ));
    }
    let sym = hermitian_part(cov);
    let gains = angles
        .iter()
        .map(|&theta| {
            let v = steering_vector(theta, geom);
            v.dotc(&(&sym * &v)).re.max(0.0)
        })
        .collect();
    Ok(BeampatternCurve {
        angles: angles.to_vec(),
        gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_matrix, frob_sq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dft_rows(m: usize, tau: usize, scale: f64) -> CMat {
        CMat::from_fn(m, tau, |r, c| {
            Complex64::from_polar(
                scale,
                2.0 * std::f64::consts::PI * (r * c) as f64 / tau as f64,
            )
        })
    }

    #[test]
    fn orthogonal_rows_give_scaled_identity() {
        let (m, tau, pt) = (4, 8, 2.0);
        let x = dft_rows(m, tau, (pt / m as f64).sqrt());
        let cov = waveform_covariance(&x).unwrap();
        let expected = CMat::identity(m, m) * Complex64::new(pt / m as f64, 0.0);
        assert!(frob_sq(&(cov - expected)) < 1e-24);
    }

    #[test]
    fn single_column_is_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = complex_gaussian_matrix(4, 1, &mut rng);
        let cov = waveform_covariance(&x).unwrap();
        assert!(frob_sq(&(&cov - &x * x.adjoint())) < 1e-24);
        let mut eig: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!(eig[..3].iter().all(|l| l.abs() < 1e-12));
    }

    #[test]
    fn covariance_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = complex_gaussian_matrix(3, 5, &mut rng);
        let cov = waveform_covariance(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..5 {
                    acc += x[(i, q)] * x[(j, q)].conj();
                }
                assert!((cov[(i, j)] - acc / 5.0).norm() < 1e-12);
            }
        }
        for l in cov.symmetric_eigen().eigenvalues.iter() {
            assert!(*l > -1e-10);
        }
    }

    #[test]
    fn flat_pattern_for_scaled_identity() {
        let geom = ArrayGeometry::half_wavelength(6).unwrap();
        let cov = CMat::identity(6, 6) * Complex64::new(1.5 / 6.0, 0.0);
        let angles = angle_grid_deg(-90.0, 90.0, 1.0).unwrap();
        let bp = transmit_beampattern(&cov, &angles, &geom).unwrap();
        assert_eq!(bp.angles.len(), 181);
        assert!(bp.gains.iter().all(|g| (g - 1.5).abs() < 1e-12));
    }

    #[test]
    fn coherent_peak_is_m_squared() {
        let geom = ArrayGeometry::half_wavelength(5).unwrap();
        let theta0 = 0.3;
        let v = steering_vector(theta0, &geom);
        let cov = &v * v.adjoint();
        let bp = transmit_beampattern(&cov, &[theta0, -0.7], &geom).unwrap();
        assert!((bp.gains[0] - 25.0).abs() < 1e-10);
        assert!(bp.gains[1] < 25.0);
    }

    #[test]
    fn matches_quadratic_form_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let geom = ArrayGeometry::half_wavelength(4).unwrap();
        let g = complex_gaussian_matrix(4, 4, &mut rng);
        let cov = &g * g.adjoint();
        let angles = [-1.0, -0.2, 0.0, 0.9];
        let bp = transmit_beampattern(&cov, &angles, &geom).unwrap();
        for (i, &theta) in angles.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    let va =
                        Complex64::from_polar(1.0, std::f64::consts::PI * a as f64 * theta.sin());
                    let vb =
                        Complex64::from_polar(1.0, std::f64::consts::PI * b as f64 * theta.sin());
                    acc += va.conj() * cov[(a, b)] * vb;
                }
            }
            assert!((bp.gains[i] - acc.re).abs() < 1e-9 * acc.re.abs().max(1.0));
        }
    }

    #[test]
    fn pattern_averages_to_trace_in_sine_space() {
        // With half-wavelength spacing the cross terms integrate to zero over
        // a uniform grid in sin θ.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let geom = ArrayGeometry::half_wavelength(8).unwrap();
        let x = complex_gaussian_matrix(8, 8, &mut rng);
        let cov = waveform_covariance(&x).unwrap();
        let n = 4001;
        let angles: Vec<f64> = (0..n)
            .map(|i| (-1.0 + 2.0 * i as f64 / (n - 1) as f64).asin())
            .collect();
        let bp = transmit_beampattern(&cov, &angles, &geom).unwrap();
        let mean = bp.gains.iter().sum::<f64>() / n as f64;
        let trace = cov.trace().re;
        assert!((mean - trace).abs() < 0.02 * trace, "{mean} vs {trace}");
    }

    #[test]
    fn local_maxima_ordering() {
        let curve = BeampatternCurve {
            angles: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            gains: vec![0.0, 2.0, 1.0, 3.0, 0.5, 1.0],
        };
        assert_eq!(curve.local_maxima(), vec![3, 1, 5]);
        assert_eq!(curve.peak_angles(2), vec![1.0, 3.0]);
        assert_eq!(curve.argmax(), Some(3));
    }

    #[test]
    fn rejects_wrong_size() {
        let geom = ArrayGeometry::half_wavelength(3).unwrap();
        assert!(transmit_beampattern(&CMat::identity(4, 4), &[0.0], &geom).is_err());
        assert!(angle_grid_deg(0.0, 1.0, 0.0).is_err());
    }
}
