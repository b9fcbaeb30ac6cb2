//! Closed-form and optimization baselines for multi-user waveform design.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::{steering_vector, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{
    frob_sq, hermitian_eigen, hermitian_sqrt, require_positive, require_shape, CMat, CVec,
};
use crate::metrics::{mui_power, RateReport};

/// Desired transmit covariance `C_D` with its power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTemplate {
    pub matrix: CMat,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Omni,
    Directional,
    Tradeoff,
    EpsilonComm,
    EpsilonSens,
    Learned,
    Genie,
}

/// Transmit matrix `X` (M×τ) with `‖X‖_F²/τ = power`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformDesign {
    pub x: CMat,
    pub power: f64,
    pub provenance: Provenance,
}

impl WaveformDesign {
    pub fn frame_len(&self) -> usize {
        self.x.ncols()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

pub fn reference_covariance_omni(power: f64, num_antennas: usize) -> Result<CovarianceTemplate> {
    require_positive("power", power)?;
    if num_antennas == 0 {
        return Err(Error::invalid("num_antennas", "must be at least 1"));
    }
    let m = num_antennas as f64;
    Ok(CovarianceTemplate {
        matrix: CMat::identity(num_antennas, num_antennas) * Complex64::new(power / m, 0.0),
        power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalOptions {
    /// Full width of each rectangular lobe in the desired pattern.
    /// Capped at the array's half-power beamwidth: a mask wider than the
    /// beam is fitted with a rippled flat top whose peaks wander off target.
    pub mask_width_deg: f64,
    pub max_iterations: usize,
    /// Stop once the relative change of C per iteration falls below this.
    pub tolerance: f64,
}

impl Default for DirectionalOptions {
    fn default() -> Self {
        Self {
            mask_width_deg: 10.0,
            max_iterations: 20_000,
            tolerance: 1e-9,
        }
    }
}

/// Broadside half-power beamwidth `0.886 / (Δ M)` in degrees.
pub fn half_power_beamwidth_deg(geom: &ArrayGeometry) -> f64 {
    (0.886 / (geom.spacing() * geom.num_antennas() as f64)).to_degrees()
}

/// Rectangular mask: 1 within half the mask width of any target, else 0.
///
/// Lobe edges are placed in sin θ so that every lobe spans the same
/// electrical width; at broadside this is exactly `mask_width_deg`.
pub fn directional_mask(targets: &[f64], grid: &[f64], mask_width_deg: f64) -> Vec<f64> {
    let half = mask_width_deg.to_radians() / 2.0;
    grid.iter()
        .map(|&g| {
            if targets
                .iter()
                .any(|&t| (g.sin() - t.sin()).abs() <= half * t.cos() + 1e-12)
            {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Fit of the beampattern `vᴴCv` over `grid` to a scaled rectangular mask
/// around `targets`, subject to `C ⪰ 0`, `tr C = power`.
pub fn directional_covariance(
    targets: &[f64],
    power: f64,
    geom: &ArrayGeometry,
    grid: &[f64],
    options: &DirectionalOptions,
) -> Result<CovarianceTemplate> {
    if targets.is_empty() {
        return Err(Error::invalid("targets", "need at least one target angle"));
    }
    require_positive("power", power)?;
    if grid.is_empty() {
        return Err(Error::invalid("grid", "is empty"));
    }
    let width = options.mask_width_deg.min(half_power_beamwidth_deg(geom));
    let mask = directional_mask(targets, grid, width);
    if mask.iter().all(|&d| d == 0.0) {
        return Err(Error::invalid(
            "targets",
            "no grid point falls inside the mask",
        ));
    }
    let problem = PatternFit::new(geom, grid, mask);
    let m = geom.num_antennas();

    let lipschitz = problem.lipschitz_estimate(m);
    let step = 1.0 / lipschitz;
    let mut c = CMat::identity(m, m) * Complex64::new(power / m as f64, 0.0);
    let mut y = c.clone();
    let mut t = 1.0f64;
    let mut change = f64::INFINITY;
    for iter in 0..options.max_iterations {
        let grad = problem.gradient(&y);
        let next = project_trace_psd(&(&y - grad * Complex64::new(step, 0.0)), power);
        change = frob_sq(&(&next - &c)).sqrt() / power;
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = Complex64::new((t - 1.0) / t_next, 0.0);
        y = &next + (&next - &c) * momentum;
        // Restart the momentum whenever it would increase the objective.
        if problem.objective(&next) > problem.objective(&c) {
            y = next.clone();
            t = 1.0;
        } else {
            t = t_next;
        }
        c = next;
        if change < options.tolerance {
            log::debug!("directional covariance converged after {iter} iterations");
            return Ok(CovarianceTemplate { matrix: c, power });
        }
    }
    Err(Error::NonConvergence {
        what: "directional covariance",
        iterations: options.max_iterations,
        residual: change,
    })
}

/// Residual of the best scaled-mask fit: `min_α Σ_θ (α d_θ − vᴴCv)²`.
pub fn pattern_fit_residual(
    cov: &CMat,
    targets: &[f64],
    geom: &ArrayGeometry,
    grid: &[f64],
    mask_width_deg: f64,
) -> f64 {
    let mask = directional_mask(targets, grid, mask_width_deg);
    PatternFit::new(geom, grid, mask).objective(cov)
}

struct PatternFit {
    steering: Vec<CVec>,
    mask: Vec<f64>,
    weights: Vec<f64>,
    mask_sq: f64,
}

impl PatternFit {
    fn new(geom: &ArrayGeometry, grid: &[f64], mask: Vec<f64>) -> Self {
        let steering = grid.iter().map(|&g| steering_vector(g, geom)).collect();
        // cos θ is the density of sin θ per unit angle: weighting by it makes
        // the fit uniform in the array's natural coordinate.
        let weights: Vec<f64> = grid.iter().map(|g| g.cos().max(1e-3)).collect();
        let mask_sq = mask.iter().zip(&weights).map(|(d, w)| w * d * d).sum();
        Self {
            steering,
            mask,
            weights,
            mask_sq,
        }
    }

    fn pattern(&self, c: &CMat) -> Vec<f64> {
        self.steering.iter().map(|v| v.dotc(&(c * v)).re).collect()
    }

    /// Component of the pattern orthogonal to the mask.
    fn residual(&self, c: &CMat) -> Vec<f64> {
        let p = self.pattern(c);
        let alpha = p
            .iter()
            .zip(&self.mask)
            .zip(&self.weights)
            .map(|((p, d), w)| w * p * d)
            .sum::<f64>()
            / self.mask_sq;
        p.iter()
            .zip(&self.mask)
            .map(|(p, d)| p - alpha * d)
            .collect()
    }

    fn objective(&self, c: &CMat) -> f64 {
        self.residual(c)
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r * r)
            .sum()
    }

    fn gradient(&self, c: &CMat) -> CMat {
        let r = self.residual(c);
        let m = c.nrows();
        let mut g = CMat::zeros(m, m);
        for ((v, &rv), w) in self.steering.iter().zip(&r).zip(&self.weights) {
            g += v * v.adjoint() * Complex64::new(2.0 * w * rv, 0.0);
        }
        g
    }

    /// Upper bound on the gradient's Lipschitz constant from power iteration
    /// on the (linear) gradient map, padded for safety.
    fn lipschitz_estimate(&self, m: usize) -> f64 {
        let mut c = CMat::identity(m, m);
        let mut norm = 1.0;
        for _ in 0..50 {
            let g = self.gradient(&c);
            norm = frob_sq(&g).sqrt();
            if norm == 0.0 {
                return 1.0;
            }
            c = g / Complex64::new(norm, 0.0);
        }
        1.1 * norm
    }
}

/// Euclidean projection onto `{C ⪰ 0, tr C = power}`.
fn project_trace_psd(a: &CMat, power: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(a);
    let projected = project_simplex(&values, power);
    let d = DVector::from_iterator(
        projected.len(),
        projected.iter().map(|&l| Complex64::new(l, 0.0)),
    );
    crate::linalg::scale_columns(&vectors, &d) * vectors.adjoint()
}

/// Projection of a vector onto `{x ≥ 0, Σx = total}`.
fn project_simplex(values: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - total) / (i + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    values.iter().map(|&v| (v - shift).max(0.0)).collect()
}

/// Waveform with covariance exactly `C_D` that minimizes `‖HX − D‖_F`.
pub fn procrustes_waveform(
    template: &CovarianceTemplate,
    h: &CMat,
    d: &CMat,
) -> Result<WaveformDesign> {
    let m = template.matrix.nrows();
    let tau = d.ncols();
    require_shape("covariance template", &template.matrix, m, m)?;
    require_shape("channel H", h, d.nrows(), m)?;
    if tau < m {
        return Err(Error::invalid(
            "tau",
            format!("frame length {tau} is shorter than the {m} antennas"),
        ));
    }
    let f = hermitian_sqrt(&template.matrix);
    let target = f.adjoint() * h.adjoint() * d;
    let svd = target.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᴴ");
    let rotation = u * v_t;
    let x = f * rotation * Complex64::new((tau as f64).sqrt(), 0.0);
    Ok(WaveformDesign {
        x,
        power: template.power,
        provenance: Provenance::Omni,
    })
}

/// Global minimizer of `η‖HX − D‖² + (1 − η)‖X − X0‖²` on `‖X‖² = τ P_T`.
pub fn tradeoff_design(
    h: &CMat,
    d: &CMat,
    x0: &CMat,
    eta: f64,
    power: f64,
) -> Result<WaveformDesign> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", format!("{eta} outside [0, 1]")));
    }
    require_positive("power", power)?;
    let m = h.ncols();
    let tau = d.ncols();
    require_shape("desired symbols D", d, h.nrows(), tau)?;
    require_shape("reference waveform X0", x0, m, tau)?;
    let budget = tau as f64 * power;

    let eta_c = Complex64::new(eta, 0.0);
    let rest = Complex64::new(1.0 - eta, 0.0);
    let a = h.adjoint() * h * eta_c + CMat::identity(m, m) * rest;
    let b = h.adjoint() * d * eta_c + x0 * rest;
    let x = solve_sphere_quadratic(&a, &b, budget)?;
    Ok(WaveformDesign {
        x,
        power,
        provenance: Provenance::Tradeoff,
    })
}

/// Minimizes `tr(XᴴAX) − 2 Re tr(XᴴB)` over `‖X‖_F² = budget` for Hermitian A.
fn solve_sphere_quadratic(a: &CMat, b: &CMat, budget: f64) -> Result<CMat> {
    let (lambda, u) = hermitian_eigen(a);
    let c = u.adjoint() * b;
    let row_energy: Vec<f64> = c
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let b_norm = row_energy.iter().sum::<f64>().sqrt();
    let m = lambda.len();
    let tau = b.ncols();

    if b_norm == 0.0 {
        log::warn!("linear term vanishes; returning an arbitrary minimum-eigenvector waveform");
        let row = CMat::from_element(1, tau, Complex64::new((budget / tau as f64).sqrt(), 0.0));
        return Ok(u.column(0) * row);
    }

    let lambda_min = lambda[0];
    let scale = lambda.iter().map(|l| l.abs()).fold(1.0, f64::max);
    let degenerate_tol = 1e-12 * scale;
    let energy_tol = 1e-20 * b_norm * b_norm;
    let in_min_space = |i: usize| lambda[i] - lambda_min <= degenerate_tol;
    let min_space_energy: f64 = (0..m)
        .filter(|&i| in_min_space(i))
        .map(|i| row_energy[i])
        .sum();

    // φ(t) = Σ ‖c_i‖² / (λ_i − λ_min + t)², decreasing in t = μ + λ_min > 0.
    let phi = |t: f64| -> f64 {
        (0..m)
            .map(|i| row_energy[i] / (lambda[i] - lambda_min + t).powi(2))
            .sum()
    };
    let assemble = |t: f64| -> CMat {
        let mut scaled = c.clone();
        for i in 0..m {
            let w = 1.0 / (lambda[i] - lambda_min + t);
            scaled.row_mut(i).scale_mut(w);
        }
        &u * scaled
    };

    if min_space_energy <= energy_tol {
        // Hard case: the pole at −λ_min is absent. If even μ = −λ_min
        // leaves the sphere unreached, fill up along the minimum eigenvector.
        let partial = |i: usize| {
            if in_min_space(i) {
                0.0
            } else {
                row_energy[i] / (lambda[i] - lambda_min).powi(2)
            }
        };
        let phi_at_pole: f64 = (0..m).map(partial).sum();
        if phi_at_pole <= budget {
            let mut scaled = c.clone();
            for i in 0..m {
                let w = if in_min_space(i) {
                    0.0
                } else {
                    1.0 / (lambda[i] - lambda_min)
                };
                scaled.row_mut(i).scale_mut(w);
            }
            let mut x = &u * scaled;
            let fill = ((budget - phi_at_pole).max(0.0) / tau as f64).sqrt();
            let row = CMat::from_element(1, tau, Complex64::new(fill, 0.0));
            x += u.column(0) * row;
            return Ok(x);
        }
    }

    let mut lo = 0.0f64;
    let mut hi = b_norm / budget.sqrt();
    if phi(hi) > budget * (1.0 + 1e-12) {
        return Err(Error::NotBracketed("sphere-constrained quadratic"));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let x = assemble(0.5 * (lo + hi));
    // Remove the last bit of bisection error from the power constraint.
    let norm = frob_sq(&x).sqrt();
    Ok(x * Complex64::new(budget.sqrt() / norm, 0.0))
}

/// ‖X − X0‖_F², the deviation from the sensing reference.
pub fn sensing_mismatch(x: &CMat, x0: &CMat) -> Result<f64> {
    require_shape("sensing mismatch", x, x0.nrows(), x0.ncols())?;
    Ok(frob_sq(&(x - x0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonMode {
    /// Minimize MUI subject to `‖X − X0‖² ≤ ε`.
    CommPriority,
    /// Minimize `‖X − X0‖²` subject to MUI `≤ ε`.
    SensPriority,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonOutcome {
    pub design: WaveformDesign,
    /// Scalarization weight whose solution was returned.
    pub eta: f64,
    /// Value of the constrained metric at the solution.
    pub constraint_value: f64,
    /// `ε − constraint_value`, nonnegative.
    pub slack: f64,
}

/// ε-constraint design by bisection on the trade-off weight.
pub fn epsilon_design(
    h: &CMat,
    d: &CMat,
    x0: &CMat,
    epsilon: f64,
    mode: EpsilonMode,
    power: f64,
) -> Result<EpsilonOutcome> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    let constrained = |eta: f64| -> Result<(WaveformDesign, f64)> {
        let design = tradeoff_design(h, d, x0, eta, power)?;
        let value = match mode {
            EpsilonMode::CommPriority => sensing_mismatch(&design.x, x0)?,
            EpsilonMode::SensPriority => mui_power(h, &design.x, d)?,
        };
        Ok((design, value))
    };
    // The constrained metric decreases toward `best_eta` and grows toward
    // `free_eta`, where the objective is optimized alone.
    let (best_eta, free_eta) = match mode {
        EpsilonMode::CommPriority => (0.0, 1.0),
        EpsilonMode::SensPriority => (1.0, 0.0),
    };
    let provenance = match mode {
        EpsilonMode::CommPriority => Provenance::EpsilonComm,
        EpsilonMode::SensPriority => Provenance::EpsilonSens,
    };
    let finish = |(mut design, value): (WaveformDesign, f64), eta: f64| {
        design.provenance = provenance;
        EpsilonOutcome {
            design,
            eta,
            constraint_value: value,
            slack: (epsilon - value).max(0.0),
        }
    };

    let free = constrained(free_eta)?;
    if free.1 <= epsilon {
        return Ok(finish(free, free_eta));
    }
    let best = constrained(best_eta)?;
    if best.1 > epsilon * (1.0 + 1e-9) {
        return Err(Error::EpsilonInfeasible {
            min_achievable: best.1,
        });
    }
    let (mut feasible, mut infeasible) = (best_eta, free_eta);
    let mut feasible_solution = best;
    for _ in 0..60 {
        let mid = 0.5 * (feasible + infeasible);
        let candidate = constrained(mid)?;
        if candidate.1 <= epsilon {
            feasible = mid;
            feasible_solution = candidate;
        } else {
            infeasible = mid;
        }
        if (feasible - infeasible).abs() < 1e-13 {
            break;
        }
    }
    Ok(finish(feasible_solution, feasible))
}

/// Zero-interference upper bound: every user receives its symbols cleanly.
pub fn genie_rate(d: &CMat, noise_var: f64) -> Result<RateReport> {
    require_positive("noise_var", noise_var)?;
    if d.ncols() == 0 {
        return Err(Error::invalid("D", "has no columns"));
    }
    let tau = d.ncols() as f64;
    let sinr = d
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>() / tau / noise_var)
        .collect();
    Ok(RateReport::from_sinr(sinr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn simplex_projection_properties() {
        let p = project_simplex(&[0.5, -1.0, 2.0], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert_eq!(p[1], 0.0);
        // Already feasible points are fixed.
        let q = project_simplex(&[0.2, 0.3, 0.5], 1.0);
        for (a, b) in q.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_psd_projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = complex_gaussian_matrix(4, 4, &mut rng);
        let p = project_trace_psd(&(&g + g.adjoint()), 2.0);
        assert!((p.trace().re - 2.0).abs() < 1e-10);
        let again = project_trace_psd(&p, 2.0);
        assert!(frob_sq(&(again - &p)) < 1e-20);
    }

    #[test]
    fn omni_template() {
        let t = reference_covariance_omni(1.0, 4).unwrap();
        assert!(frob_sq(&(&t.matrix - CMat::identity(4, 4) * c(0.25, 0.0))) < 1e-30);
        assert!((t.matrix.trace().re - 1.0).abs() < 1e-15);
        assert!(reference_covariance_omni(0.0, 4).is_err());
    }

    #[test]
    fn mask_marks_lobes() {
        let grid: Vec<f64> = (-90..=90).map(|d| (d as f64).to_radians()).collect();
        let mask = directional_mask(&[0.0], &grid, 10.0);
        assert_eq!(mask.iter().filter(|&&m| m == 1.0).count(), 11);
    }

    #[test]
    fn procrustes_constraint_with_zero_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = reference_covariance_omni(2.0, 3).unwrap();
        let h = CMat::zeros(2, 3);
        let d = complex_gaussian_matrix(2, 5, &mut rng);
        let w = procrustes_waveform(&t, &h, &d).unwrap();
        let cov = &w.x * w.x.adjoint() / c(5.0, 0.0);
        assert!(frob_sq(&(cov - &t.matrix)).sqrt() < 1e-8);
    }

    #[test]
    fn procrustes_requires_long_frame() {
        let t = reference_covariance_omni(1.0, 16).unwrap();
        let h = CMat::zeros(4, 16);
        let d = CMat::zeros(4, 10);
        assert!(procrustes_waveform(&t, &h, &d).is_err());
    }

    #[test]
    fn procrustes_rank_deficient_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let geom = ArrayGeometry::half_wavelength(4).unwrap();
        let v = steering_vector(0.4, &geom);
        let t = CovarianceTemplate {
            matrix: &v * v.adjoint() * c(0.25, 0.0),
            power: 1.0,
        };
        let h = complex_gaussian_matrix(2, 4, &mut rng);
        let d = complex_gaussian_matrix(2, 6, &mut rng);
        let w = procrustes_waveform(&t, &h, &d).unwrap();
        let cov = &w.x * w.x.adjoint() / c(6.0, 0.0);
        assert!(frob_sq(&(cov - &t.matrix)).sqrt() < 1e-8);
    }

    #[test]
    fn tradeoff_pure_sensing_is_scaled_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = complex_gaussian_matrix(2, 4, &mut rng);
        let d = complex_gaussian_matrix(2, 5, &mut rng);
        let x0 = complex_gaussian_matrix(4, 5, &mut rng);
        let w = tradeoff_design(&h, &d, &x0, 0.0, 1.5).unwrap();
        let expected = &x0 * c((7.5 / frob_sq(&x0)).sqrt(), 0.0);
        assert!(frob_sq(&(w.x - expected)) < 1e-16);
    }

    #[test]
    fn tradeoff_pure_comm_hits_zero_mui() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = complex_gaussian_matrix(3, 3, &mut rng);
        let x_star = complex_gaussian_matrix(3, 4, &mut rng);
        let d = &h * &x_star;
        let power = frob_sq(&x_star) / 4.0;
        let x0 = complex_gaussian_matrix(3, 4, &mut rng);
        let w = tradeoff_design(&h, &d, &x0, 1.0, power).unwrap();
        assert!(frob_sq(&(&w.x - &x_star)) < 1e-14);
        assert!(mui_power(&h, &w.x, &d).unwrap() < 1e-12);
    }

    #[test]
    fn tradeoff_hard_case_fills_null_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = complex_gaussian_matrix(2, 4, &mut rng);
        let d = complex_gaussian_matrix(2, 3, &mut rng);
        let x0 = CMat::zeros(4, 3);
        let w = tradeoff_design(&h, &d, &x0, 1.0, 50.0).unwrap();
        assert!((frob_sq(&w.x) - 150.0).abs() < 1e-8);
        assert!(mui_power(&h, &w.x, &d).unwrap() < 1e-10);
    }

    #[test]
    fn tradeoff_degenerate_linear_term() {
        let h = CMat::zeros(1, 2);
        let d = CMat::zeros(1, 2);
        let x0 = CMat::zeros(2, 2);
        let w = tradeoff_design(&h, &d, &x0, 0.5, 1.0).unwrap();
        assert!((frob_sq(&w.x) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_inactive_and_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = complex_gaussian_matrix(2, 3, &mut rng);
        let d = complex_gaussian_matrix(2, 4, &mut rng);
        let x0 = complex_gaussian_matrix(3, 4, &mut rng);
        let out =
            epsilon_design(&h, &d, &x0, f64::INFINITY, EpsilonMode::CommPriority, 1.0).unwrap();
        let direct = tradeoff_design(&h, &d, &x0, 1.0, 1.0).unwrap();
        assert_eq!(out.eta, 1.0);
        assert!(frob_sq(&(out.design.x - direct.x)) < 1e-20);
        assert!(matches!(
            epsilon_design(&h, &d, &x0, 1e-9, EpsilonMode::CommPriority, 1.0),
            Err(Error::EpsilonInfeasible { .. })
        ));
        assert!(epsilon_design(&h, &d, &x0, -1.0, EpsilonMode::SensPriority, 1.0).is_err());
    }

    #[test]
    fn genie_rates() {
        let d = CMat::from_element(2, 3, c(0.6, 0.8));
        let r = genie_rate(&d, 1.0).unwrap();
        assert!(r.per_user_sinr.iter().all(|g| (g - 1.0).abs() < 1e-12));
        assert!((r.sum_rate - 2.0).abs() < 1e-12);
        let r = genie_rate(&d, 0.1).unwrap();
        assert!(r.per_user_sinr.iter().all(|g| (g - 10.0).abs() < 1e-9));
    }
}
