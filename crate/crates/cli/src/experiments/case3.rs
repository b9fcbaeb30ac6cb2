//! Autoencoder constellations across the sensing/communication weight.

use isac_core::constellation_ae::{
    baseline_constellation, calibrate, evaluate_autoencoder, evaluate_constellation,
    extract_constellation, train_isac_ae, AeConfig, BaselineKind, CalibrationTarget, CommHead,
    Constellation, IsacMetrics,
};

use super::{stream, tag, Summary};
use crate::config::{Case3SweepParams, HeadKind};
use crate::output::{num, Outputs, METRICS_HEADER};
use crate::CliError;

fn metrics_row(
    method: &str,
    eta: Option<f64>,
    run: Option<usize>,
    m: &IsacMetrics,
    spread: f64,
) -> Vec<String> {
    vec![
        method.to_string(),
        eta.map(num).unwrap_or_default(),
        run.map(|r| r.to_string()).unwrap_or_default(),
        num(m.ser),
        num(m.pd),
        num(m.pfa),
        num(spread),
    ]
}

fn insert_metrics(summary: &mut Summary, key: &str, m: &IsacMetrics, spread: f64) {
    summary.insert(format!("ser_{key}"), m.ser);
    summary.insert(format!("pd_{key}"), m.pd);
    summary.insert(format!("pfa_{key}"), m.pfa);
    summary.insert(format!("spread_{key}"), spread);
}

pub fn sweep(p: &Case3SweepParams, seed: u64, out: &mut Outputs) -> Result<Summary, CliError> {
    let order = 1usize << p.bits;
    let psk = baseline_constellation(BaselineKind::Psk, order)?;
    let qam = baseline_constellation(BaselineKind::Qam, order)?;
    let target = CalibrationTarget {
        ser: p.calibration.ser,
        pd: p.calibration.pd,
        pfa: p.calibration.pfa,
    };
    // Noise levels and threshold at which PSK hits the target operating point.
    let cal = calibrate(&psk, &target, p.calibration.trials, stream(seed, 0))?;
    log::info!(
        "calibration: comm noise {:.5}, radar noise {:.5}, threshold {:.5}",
        cal.comm_noise_var,
        cal.radar_noise_var,
        cal.threshold
    );
    let eval_seed = stream(seed, 1);

    let mut rows = Vec::new();
    let mut summary = Summary::new();
    summary.insert("comm_noise_var".into(), cal.comm_noise_var);
    summary.insert("radar_noise_var".into(), cal.radar_noise_var);
    summary.insert("threshold".into(), cal.threshold);
    for (name, c) in [("psk", &psk), ("qam", &qam)] {
        let m = evaluate_constellation(c, &cal, p.eval_trials, eval_seed);
        rows.push(metrics_row(name, None, None, &m, c.amplitude_spread()));
        insert_metrics(&mut summary, name, &m, c.amplitude_spread());
        out.text(&format!("constellation_{name}.csv"), &c.to_csv())?;
    }

    let head = match p.comm_head {
        HeadKind::Softmax => CommHead::Softmax,
        HeadKind::PerBit => CommHead::PerBit,
    };
    for (ei, &eta) in p.etas.iter().enumerate() {
        let mut mean = IsacMetrics {
            ser: 0.0,
            pd: 0.0,
            pfa: 0.0,
        };
        let mut spread = 0.0;
        for run in 0..p.runs {
            let config = AeConfig {
                bits: p.bits,
                eta,
                comm_noise_var: cal.comm_noise_var,
                radar_noise_var: cal.radar_noise_var,
                epochs: p.epochs,
                samples_per_epoch: p.samples_per_epoch,
                batch_size: p.batch_size,
                lr: p.lr,
                comm_head: head,
                seed: stream(seed, 100 + (ei * p.runs + run) as u64),
            };
            let (model, report) = train_isac_ae(&config)?;
            let constellation: Constellation = extract_constellation(&model)?;
            let m = evaluate_autoencoder(&model, &cal, p.eval_trials, eval_seed)?;
            let s = constellation.amplitude_spread();
            log::info!(
                "eta {eta} run {run}: loss {:.5}, SER {:.4}, Pd {:.4}, Pfa {:.4}, spread {s:.4}",
                report.loss.last().copied().unwrap_or(f64::NAN),
                m.ser,
                m.pd,
                m.pfa
            );
            rows.push(metrics_row("learned", Some(eta), Some(run), &m, s));
            out.text(
                &format!("constellation_eta{}_run{run}.csv", tag(eta)),
                &constellation.to_csv(),
            )?;
            let n = p.runs as f64;
            mean.ser += m.ser / n;
            mean.pd += m.pd / n;
            mean.pfa += m.pfa / n;
            spread += s / n;
        }
        insert_metrics(
            &mut summary,
            &format!("learned_eta{}", tag(eta)),
            &mean,
            spread,
        );
    }
    out.csv("metrics.csv", &METRICS_HEADER, rows)?;
    Ok(summary)
}
