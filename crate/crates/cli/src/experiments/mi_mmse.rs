use isac_core::metrics::{awgn_mi_mmse_with_order, db_to_linear, InputDistribution};

use super::Summary;
use crate::config::{InputKind, MiMmseParams};
use crate::output::{num, Outputs, MI_MMSE_HEADER};
use crate::CliError;

fn distribution(kind: InputKind) -> InputDistribution {
    match kind {
        InputKind::Gaussian => InputDistribution::Gaussian,
        InputKind::Bpsk => InputDistribution::bpsk(),
        InputKind::Qpsk => InputDistribution::qpsk(),
    }
}

pub fn run(p: &MiMmseParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let mut rows = Vec::new();
    let mut summary = Summary::new();
    let mut gauss_err: f64 = 0.0;
    for &kind in &p.inputs {
        let input = distribution(kind);
        for &snr_db in &p.snr_db {
            let snr = db_to_linear(snr_db);
            let pt = awgn_mi_mmse_with_order(&input, snr, p.hermite_order)?;
            if kind == InputKind::Gaussian {
                gauss_err = gauss_err
                    .max((pt.mutual_info - snr.ln_1p()).abs())
                    .max((pt.mmse - 1.0 / (1.0 + snr)).abs());
            }
            rows.push(vec![
                num(snr_db),
                kind.label().to_string(),
                num(pt.mutual_info),
                num(pt.mmse),
            ]);
        }
    }
    out.csv("mi_mmse.csv", &MI_MMSE_HEADER, rows)?;
    if p.inputs.contains(&InputKind::Gaussian) {
        summary.insert("gaussian_max_abs_error".into(), gauss_err);
    }
    Ok(summary)
}
