//! Learned multi-user ISAC waveforms: sum rate, detection, beampattern and
//! generalization under channel aging and topology change.

use isac_core::channel::{age_channel_matrix, AgingParams, ArrayGeometry, ChannelMatrix};
use isac_core::classical_design::{genie_rate, reference_covariance_omni, tradeoff_design};
use isac_core::linalg::{child_rng, CMat};
use isac_core::metrics::{
    angle_grid_deg, db_to_linear, glrt_statistic, pd_at_pfa, per_user_sinr, roc_curve, sum_rate,
    synthesize_echo, transmit_beampattern, waveform_covariance, BeampatternCurve,
};
use isac_core::neural::TrainConfig;
use isac_core::waveform_learn::{
    generate_dataset, predict_waveforms, reference_waveform, train_waveform_net_augmented,
    DatasetConfig, ReferenceKind, TrainedWaveformNet, WaveformSample,
};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{stream, tag, Summary};
use crate::config::{
    Case1AgingParams, Case1BeampatternParams, Case1RateParams, Case1RocParams, NetTraining,
    Scenario,
};
use crate::output::{num, Outputs, BEAMPATTERN_HEADER, RATE_HEADER, ROC_HEADER};
use crate::CliError;

fn dataset_config(s: &Scenario, reference: ReferenceKind) -> DatasetConfig {
    DatasetConfig {
        num_antennas: s.num_antennas,
        frame_len: s.frame_len,
        power: s.power,
        rician_factors: s.rician_factors.clone(),
        large_scale_gain: 1.0,
        angle_range: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        reference,
    }
}

struct Trained {
    net: TrainedWaveformNet,
    /// Held-out samples, in split order.
    test: Vec<WaveformSample>,
}

fn train_net(
    config: &DatasetConfig,
    training: &NetTraining,
    eta: f64,
    seed: u64,
    eval: usize,
) -> Result<Trained, CliError> {
    let data = generate_dataset(config, training.samples, stream(seed, 0))?;
    let tc = TrainConfig {
        epochs: training.epochs,
        batch_size: training.batch_size,
        lr: training.lr,
        early_stop_patience: training.patience,
        seed: stream(seed, 1),
    };
    let net = train_waveform_net_augmented(&data, eta, config.power, &tc, training.augment_copies)?;
    log::info!(
        "waveform net: best epoch {} of {}, validation loss {:.5}",
        net.report.best_epoch,
        net.report.val_loss.len(),
        net.report
            .val_loss
            .get(net.report.best_epoch)
            .copied()
            .unwrap_or(f64::NAN)
    );
    let test = net
        .split
        .test
        .iter()
        .take(eval)
        .map(|&i| data[i].clone())
        .collect();
    Ok(Trained { net, test })
}

fn learned(t: &Trained, samples: &[WaveformSample]) -> Result<Vec<CMat>, CliError> {
    Ok(predict_waveforms(&t.net.model, samples, t.net.power)?
        .into_iter()
        .map(|d| d.x)
        .collect())
}

fn tradeoff_all(samples: &[WaveformSample], eta: f64, power: f64) -> Result<Vec<CMat>, CliError> {
    samples
        .par_iter()
        .map(|s| Ok(tradeoff_design(&s.channel.entries, &s.d, &s.x0, eta, power)?.x))
        .collect()
}

/// Mean sum rate (bits) of `xs[i]` serving `channels[i]` with symbols `ds[i]`.
fn mean_rate(
    channels: &[&CMat],
    ds: &[&CMat],
    xs: &[CMat],
    noise_var: f64,
) -> Result<f64, CliError> {
    let mut total = 0.0;
    for ((h, d), x) in channels.iter().zip(ds).zip(xs) {
        total += sum_rate(&per_user_sinr(h, x, d, noise_var)?);
    }
    Ok(total / xs.len() as f64)
}

fn sample_rate(samples: &[WaveformSample], xs: &[CMat], noise_var: f64) -> Result<f64, CliError> {
    let hs: Vec<&CMat> = samples.iter().map(|s| &s.channel.entries).collect();
    let ds: Vec<&CMat> = samples.iter().map(|s| &s.d).collect();
    mean_rate(&hs, &ds, xs, noise_var)
}

fn degradation_pct(reference: f64, degraded: f64) -> f64 {
    100.0 * (reference - degraded) / reference
}

pub fn rate(p: &Case1RateParams, seed: u64, out: &mut Outputs) -> Result<Summary, CliError> {
    let config = dataset_config(&p.scenario, ReferenceKind::Omni);
    let t = train_net(&config, &p.training, p.eta, seed, p.eval_channels)?;
    let x_learned = learned(&t, &t.test)?;
    let x_tradeoff = tradeoff_all(&t.test, p.eta, config.power)?;
    let x_reference: Vec<CMat> = t.test.iter().map(|s| s.x0.clone()).collect();

    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for &snr_db in &p.snr_db {
        let noise_var = config.power / db_to_linear(snr_db);
        let mut genie = 0.0;
        for s in &t.test {
            genie += genie_rate(&s.d, noise_var)?.sum_rate / t.test.len() as f64;
        }
        let r_learned = sample_rate(&t.test, &x_learned, noise_var)?;
        let r_tradeoff = sample_rate(&t.test, &x_tradeoff, noise_var)?;
        let r_reference = sample_rate(&t.test, &x_reference, noise_var)?;
        for (method, r) in [
            ("genie", genie),
            ("tradeoff", r_tradeoff),
            ("learned", r_learned),
            ("reference", r_reference),
        ] {
            rows.push(vec![num(snr_db), method.to_string(), num(r)]);
            summary.insert(format!("rate_{method}_{}dB", tag(snr_db)), r);
        }
        summary.insert(
            format!("gap_pct_{}dB", tag(snr_db)),
            degradation_pct(r_tradeoff, r_learned),
        );
    }
    out.csv("rate.csv", &RATE_HEADER, rows)?;
    Ok(summary)
}

pub fn roc(p: &Case1RocParams, seed: u64, out: &mut Outputs) -> Result<Summary, CliError> {
    let targets: Vec<f64> = p.targets_deg.iter().map(|d| d.to_radians()).collect();
    let theta = p.target_angle_deg.to_radians();
    let amplitude = db_to_linear(p.radar_snr_db).sqrt();
    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for (ci, case) in p.cases.iter().enumerate() {
        let scenario = Scenario {
            num_antennas: case.num_antennas,
            ..p.scenario.clone()
        };
        let config = dataset_config(
            &scenario,
            ReferenceKind::Directional {
                targets: targets.clone(),
            },
        );
        let case_seed = stream(seed, 100 + ci as u64);
        let samples = generate_dataset(&config, p.channels, stream(case_seed, 0))?;
        let xs = tradeoff_all(&samples, case.eta, config.power)?;
        let geom = config.geometry()?;
        let (h0, h1) =
            detection_stats(&xs, &geom, theta, amplitude, p.trials, stream(case_seed, 1))?;
        let method = format!("M{}_eta{}", case.num_antennas, tag(case.eta));
        let curve = roc_curve(&h0, &h1, p.num_thresholds)?;
        for i in 0..curve.thresholds.len() {
            rows.push(vec![
                num(curve.thresholds[i]),
                num(curve.pfa[i]),
                num(curve.pd[i]),
                method.clone(),
            ]);
        }
        let pd = pd_at_pfa(&h0, &h1, p.pfa_report)?;
        log::info!("{method}: Pd {pd:.4} at Pfa {}", p.pfa_report);
        summary.insert(format!("pd_{method}"), pd);
    }
    out.csv("roc.csv", &ROC_HEADER, rows)?;
    Ok(summary)
}

/// GLRT statistics under H0 and H1; trial i probes with `xs[i % len]`.
fn detection_stats(
    xs: &[CMat],
    geom: &ArrayGeometry,
    theta: f64,
    amplitude: f64,
    trials: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    const CHUNK: usize = 4096;
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = child_rng(seed, c as u64);
            let start = c * CHUNK;
            let n = CHUNK.min(trials - start);
            let mut h0 = Vec::with_capacity(n);
            let mut h1 = Vec::with_capacity(n);
            for i in start..start + n {
                let x = &xs[i % xs.len()];
                let alpha = Complex64::from_polar(
                    amplitude,
                    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                );
                let z1 = synthesize_echo(x, theta, alpha, 1.0, geom, &mut rng);
                h1.push(glrt_statistic(&z1, theta, x, 1.0, geom)?);
                let z0 = synthesize_echo(x, theta, Complex64::new(0.0, 0.0), 1.0, geom, &mut rng);
                h0.push(glrt_statistic(&z0, theta, x, 1.0, geom)?);
            }
            Ok((h0, h1))
        })
        .collect::<Result<_, CliError>>()?;
    let mut h0 = Vec::with_capacity(trials);
    let mut h1 = Vec::with_capacity(trials);
    for (a, b) in chunks {
        h0.extend(a);
        h1.extend(b);
    }
    Ok((h0, h1))
}

fn mean_covariance(xs: &[CMat]) -> Result<CMat, CliError> {
    let m = xs[0].nrows();
    let mut acc = CMat::zeros(m, m);
    for x in xs {
        acc += waveform_covariance(x)?;
    }
    Ok(acc / Complex64::new(xs.len() as f64, 0.0))
}

pub fn beampattern(
    p: &Case1BeampatternParams,
    seed: u64,
    out: &mut Outputs,
) -> Result<Summary, CliError> {
    let targets: Vec<f64> = p.targets_deg.iter().map(|d| d.to_radians()).collect();
    let config = dataset_config(&p.scenario, ReferenceKind::Directional { targets });
    let geom = config.geometry()?;
    let t = train_net(&config, &p.training, p.eta, seed, p.eval_channels)?;
    let grid = angle_grid_deg(-90.0, 90.0, p.grid_step_deg)?;

    let curves: Vec<(&str, BeampatternCurve)> = vec![
        (
            "directional",
            transmit_beampattern(&config.template()?.matrix, &grid, &geom)?,
        ),
        (
            "omni",
            transmit_beampattern(
                &reference_covariance_omni(config.power, config.num_antennas)?.matrix,
                &grid,
                &geom,
            )?,
        ),
        (
            "tradeoff",
            transmit_beampattern(
                &mean_covariance(&tradeoff_all(&t.test, p.eta, config.power)?)?,
                &grid,
                &geom,
            )?,
        ),
        (
            "learned",
            transmit_beampattern(&mean_covariance(&learned(&t, &t.test)?)?, &grid, &geom)?,
        ),
    ];

    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for (method, curve) in &curves {
        for (a, g) in curve.angles.iter().zip(&curve.gains) {
            rows.push(vec![num(*a), method.to_string(), num(*g)]);
        }
        if *method != "omni" {
            for (i, a) in curve.peak_angles(p.targets_deg.len()).iter().enumerate() {
                summary.insert(format!("peak{i}_deg_{method}"), a.to_degrees());
            }
        }
    }
    out.csv("beampattern.csv", &BEAMPATTERN_HEADER, rows)?;
    Ok(summary)
}

/// Keeps the first `k` users of a sample and recomputes its reference
/// waveform for that smaller system.
fn first_users(
    s: &WaveformSample,
    k: usize,
    config: &DatasetConfig,
) -> Result<WaveformSample, CliError> {
    let channel = ChannelMatrix {
        entries: s.channel.entries.rows(0, k).into_owned(),
        per_user_params: s.channel.per_user_params[..k].to_vec(),
    };
    let d = s.d.rows(0, k).into_owned();
    let x0 = reference_waveform(&config.template()?, &channel.entries, &d)?;
    Ok(WaveformSample { channel, d, x0 })
}

pub fn aging(p: &Case1AgingParams, seed: u64, out: &mut Outputs) -> Result<Summary, CliError> {
    let config = dataset_config(&p.scenario, ReferenceKind::Omni);
    let geom = config.geometry()?;
    let template = config.template()?;
    let small = train_net(
        &config,
        &p.training,
        p.eta,
        stream(seed, 10),
        p.eval_channels,
    )?;

    // Waveforms designed from h[n-1] serve h[n].
    let aging = AgingParams {
        user_speed: p.user_speed,
        carrier_freq: p.carrier_freq,
        sample_period: p.sample_period,
        mobility_phase: None,
    };
    let aged_seed = stream(seed, 11);
    let current: Vec<WaveformSample> = small
        .test
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = child_rng(aged_seed, i as u64);
            let channel = age_channel_matrix(&s.channel, &geom, &aging, &mut rng)?;
            let x0 = reference_waveform(&template, &channel.entries, &s.d)?;
            Ok(WaveformSample {
                channel,
                d: s.d.clone(),
                x0,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let x_matched = learned(&small, &current)?;
    let x_aged = learned(&small, &small.test)?;

    // The small-system model deployed in a larger system.
    let big_config = DatasetConfig {
        rician_factors: p.topology_rician_factors.clone(),
        ..config.clone()
    };
    let big = train_net(
        &big_config,
        &p.training,
        p.eta,
        stream(seed, 12),
        p.eval_channels,
    )?;
    let x_big = learned(&big, &big.test)?;
    let k = config.num_users();
    let truncated = big
        .test
        .iter()
        .map(|s| first_users(s, k, &config))
        .collect::<Result<Vec<_>, _>>()?;
    let x_mismatched = learned(&small, &truncated)?;

    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for &snr_db in &p.snr_db {
        let noise_var = config.power / db_to_linear(snr_db);
        let r_matched = sample_rate(&current, &x_matched, noise_var)?;
        let r_aged = sample_rate(&current, &x_aged, noise_var)?;
        let r_big = sample_rate(&big.test, &x_big, noise_var)?;
        let r_mismatched = sample_rate(&big.test, &x_mismatched, noise_var)?;
        for (method, r) in [
            ("matched", r_matched),
            ("aged", r_aged),
            ("topology_matched", r_big),
            ("topology_mismatched", r_mismatched),
        ] {
            rows.push(vec![num(snr_db), method.to_string(), num(r)]);
            summary.insert(format!("rate_{method}_{}dB", tag(snr_db)), r);
        }
        summary.insert(
            format!("aging_loss_pct_{}dB", tag(snr_db)),
            degradation_pct(r_matched, r_aged),
        );
        summary.insert(
            format!("topology_loss_pct_{}dB", tag(snr_db)),
            degradation_pct(r_big, r_mismatched),
        );
    }
    out.csv("rate.csv", &RATE_HEADER, rows)?;
    Ok(summary)
}
