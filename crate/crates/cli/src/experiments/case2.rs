//! Hybrid beamforming by fixed-step and unrolled projected gradient ascent.

use std::f64::consts::LN_2;

use isac_core::hybrid_pga::{
    generate_hybrid_dataset, mean_rate_trace, pga_run, plateau_layer, train_step_sizes,
    HybridSample, StepSchedule, StepTrainConfig,
};
use isac_core::metrics::db_to_linear;

use super::{stream, tag, Summary};
use crate::config::{Case2ConvergenceParams, Case2SnrParams, HybridSetup};
use crate::output::{num, Outputs, CONVERGENCE_HEADER, RATE_HEADER};
use crate::CliError;

/// Channels are unit-variance Rayleigh and σ² = 1, so the SNR is the power.
const NOISE_VAR: f64 = 1.0;

struct Datasets {
    train: Vec<HybridSample>,
    validation: Vec<HybridSample>,
    test: Vec<HybridSample>,
}

fn datasets(s: &HybridSetup, power: f64, seed: u64) -> Result<Datasets, CliError> {
    let gen = |count, index| {
        generate_hybrid_dataset(
            s.num_antennas,
            s.rf_chains,
            s.num_users,
            power,
            count,
            stream(seed, index),
        )
    };
    Ok(Datasets {
        train: gen(s.train_channels, 0)?,
        validation: gen(s.validation_channels, 1)?,
        test: gen(s.test_channels, 2)?,
    })
}

fn learn_schedule(s: &HybridSetup, data: &Datasets, seed: u64) -> Result<StepSchedule, CliError> {
    let config = StepTrainConfig {
        layers: s.layers,
        lr: s.lr,
        epochs: s.epochs,
        batch_size: s.batch_size,
        init_step: s.fixed_step,
        max_grad_norm: s.max_grad_norm,
        seed: stream(seed, 3),
        ..StepTrainConfig::default()
    };
    let (schedule, report) = train_step_sizes(&data.train, &data.validation, NOISE_VAR, &config)?;
    log::info!(
        "step sizes: best epoch {} of {}, validation loss {:.5}",
        report.best_epoch,
        config.epochs,
        report
            .val_loss
            .get(report.best_epoch.saturating_sub(1))
            .copied()
            .unwrap_or(f64::NAN)
    );
    Ok(schedule)
}

/// Fraction of channels on which `a` ends at least as high as `b`.
fn win_fraction(
    a: &StepSchedule,
    b: &StepSchedule,
    data: &[HybridSample],
) -> Result<f64, CliError> {
    let mut wins = 0;
    for s in data {
        let ra = pga_run(&s.channels, &s.init, a, NOISE_VAR)?.1;
        let rb = pga_run(&s.channels, &s.init, b, NOISE_VAR)?.1;
        if ra[ra.len() - 1] >= rb[rb.len() - 1] {
            wins += 1;
        }
    }
    Ok(wins as f64 / data.len() as f64)
}

pub fn convergence(
    p: &Case2ConvergenceParams,
    seed: u64,
    out: &mut Outputs,
) -> Result<Summary, CliError> {
    let s = &p.setup;
    let data = datasets(s, db_to_linear(p.snr_db), seed)?;
    let learned = learn_schedule(s, &data, seed)?;
    let fixed = StepSchedule::constant(s.layers, s.fixed_step)?;
    let long = StepSchedule::constant(p.fixed_horizon, s.fixed_step)?;
    let unrolled_trace = mean_rate_trace(&learned, &data.test, NOISE_VAR)?;
    let fixed_trace = mean_rate_trace(&long, &data.test, NOISE_VAR)?;

    let mut rows = Vec::new();
    for (i, r) in fixed_trace.iter().enumerate() {
        rows.push(vec![(i + 1).to_string(), "pga".to_string(), num(*r)]);
    }
    for (i, r) in unrolled_trace.iter().enumerate() {
        rows.push(vec![
            (i + 1).to_string(),
            "unrolled_pga".to_string(),
            num(*r),
        ]);
    }
    out.csv("convergence.csv", &CONVERGENCE_HEADER, rows)?;

    let final_unrolled = unrolled_trace[s.layers - 1];
    let final_fixed = fixed_trace[s.layers - 1];
    let tol = p.plateau_tol * final_unrolled.abs();
    let plateau = plateau_layer(&unrolled_trace, tol).unwrap_or(s.layers);
    let plateau_rate = unrolled_trace[plateau - 1];
    let mut summary = Summary::new();
    summary.insert("rate_bits_unrolled".into(), final_unrolled / LN_2);
    summary.insert("rate_bits_pga".into(), final_fixed / LN_2);
    summary.insert(
        "win_fraction".into(),
        win_fraction(&learned, &fixed, &data.test)?,
    );
    summary.insert("plateau_layer_unrolled".into(), plateau as f64);
    // First fixed-step layer within the tolerance of the unrolled plateau.
    match fixed_trace.iter().position(|&r| r >= plateau_rate - tol) {
        Some(i) => summary.insert("pga_layers_to_match".into(), (i + 1) as f64),
        None => summary.insert("pga_layers_to_match".into(), f64::INFINITY),
    };
    summary.insert(
        "pga_rate_bits_at_horizon".into(),
        fixed_trace[p.fixed_horizon - 1] / LN_2,
    );
    for i in 0..s.layers {
        summary.insert(format!("mu_f_{}", i + 1), learned.mu_f(i));
        summary.insert(format!("mu_w_{}", i + 1), learned.mu_w(i));
    }
    Ok(summary)
}

pub fn snr_sweep(p: &Case2SnrParams, seed: u64, out: &mut Outputs) -> Result<Summary, CliError> {
    let s = &p.setup;
    let fixed = StepSchedule::constant(s.layers, s.fixed_step)?;
    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for (i, &snr_db) in p.snr_db.iter().enumerate() {
        let point_seed = stream(seed, 50 + i as u64);
        let data = datasets(s, db_to_linear(snr_db), point_seed)?;
        let learned = learn_schedule(s, &data, point_seed)?;
        let r_fixed = mean_rate_trace(&fixed, &data.test, NOISE_VAR)?[s.layers - 1] / LN_2;
        let r_learned = mean_rate_trace(&learned, &data.test, NOISE_VAR)?[s.layers - 1] / LN_2;
        for (method, r) in [("pga", r_fixed), ("unrolled_pga", r_learned)] {
            rows.push(vec![num(snr_db), method.to_string(), num(r)]);
            summary.insert(format!("rate_{method}_{}dB", tag(snr_db)), r);
        }
    }
    out.csv("rate.csv", &RATE_HEADER, rows)?;
    Ok(summary)
}
