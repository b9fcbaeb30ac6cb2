use isac_core::constellation_ae::*;
use isac_core::metrics::InputDistribution;
use isac_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(eta: f64) -> AeConfig {
    AeConfig {
        bits: 2,
        eta,
        comm_noise_var: 0.1,
        radar_noise_var: 0.2,
        epochs: 1,
        samples_per_epoch: 64,
        batch_size: 32,
        lr: 1e-3,
        comm_head: CommHead::Softmax,
        seed: 4,
    }
}

#[test]
fn baselines_have_unit_power_and_expected_shape() {
    let psk = baseline_constellation(BaselineKind::Psk, 32).unwrap();
    assert!(psk.points.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    let qam = baseline_constellation(BaselineKind::Qam, 32).unwrap();
    assert_eq!(qam.len(), 32);
    assert!((qam.average_power() - 1.0).abs() < 1e-12);
    // cross 32-QAM on the odd grid: energies 2, 10, 18, 26, 34 in units of
    // the spacing; average 20
    let unit = (1.0f64 / 20.0).sqrt();
    let mut mags: Vec<i64> = qam
        .points
        .iter()
        .map(|z| (z.norm_sqr() / (unit * unit)).round() as i64)
        .collect();
    mags.sort_unstable();
    mags.dedup();
    assert_eq!(mags, vec![2, 10, 18, 26, 34]);
    assert_eq!(
        baseline_constellation(BaselineKind::Qam, 16).unwrap().len(),
        16
    );
    assert_eq!(
        baseline_constellation(BaselineKind::Qam, 128)
            .unwrap()
            .len(),
        128
    );
}

#[test]
fn four_psk_is_qpsk() {
    let psk = baseline_constellation(BaselineKind::Psk, 4).unwrap();
    let InputDistribution::Discrete { points, .. } = InputDistribution::qpsk() else {
        panic!("qpsk is discrete");
    };
    for p in &psk.points {
        assert!(points.iter().any(|q| (p - q).norm() < 1e-12));
    }
}

#[test]
fn comm_loss_examples() {
    // perfect one-hot → 0, uniform → ln M
    let perfect = DMatrix::from_row_slice(2, 4, &[50.0, 0.0, 0.0, 0.0, 0.0, 0.0, 50.0, 0.0]);
    assert!(comm_loss(&perfect, &[0, 2], CommHead::Softmax).unwrap().0 < 1e-12);
    let uniform = DMatrix::zeros(3, 32);
    let (l, _) = comm_loss(&uniform, &[1, 7, 31], CommHead::Softmax).unwrap();
    assert!((l - 32f64.ln()).abs() < 1e-12);

    // random logits against a direct summation
    let logits = DMatrix::from_fn(3, 4, |r, c| ((r * 4 + c) as f64 * 1.3).sin() * 2.0);
    let labels = [3, 0, 2];
    let mut expected = 0.0;
    for (r, &l) in labels.iter().enumerate() {
        let z: f64 = (0..4).map(|c| logits[(r, c)].exp()).sum();
        expected -= (logits[(r, l)].exp() / z).ln();
    }
    let (got, _) = comm_loss(&logits, &labels, CommHead::Softmax).unwrap();
    assert!((got - expected / 3.0).abs() < 1e-12);

    // per-bit: message 2 = bits (0, 1)
    let probs = DMatrix::from_row_slice(1, 2, &[0.2, 0.7]);
    let (l, _) = comm_loss(&probs, &[2], CommHead::PerBit).unwrap();
    assert!((l - (-(0.8f64.ln()) - 0.7f64.ln())).abs() < 1e-12);
}

#[test]
fn radar_loss_examples() {
    let (l, _) = radar_loss(&[1.0, 0.0], &[true, false]).unwrap();
    assert!(l < 1e-9);
    let (l, _) = radar_loss(&[0.5; 4], &[true, false, true, true]).unwrap();
    assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    let p = [0.9, 0.3, 0.6];
    let t = [true, true, false];
    let expected = -(0.9f64.ln() + 0.3f64.ln() + 0.4f64.ln()) / 3.0;
    assert!((radar_loss(&p, &t).unwrap().0 - expected).abs() < 1e-12);
    assert!(radar_loss(&p, &t[..2]).is_err());
}

#[test]
fn training_batches_follow_the_channel_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cfg = config(0.5);
    cfg.bits = 5;
    let mut model = IsacAutoencoder::new(&cfg, &mut rng).unwrap();
    model.comm_noise_var = 1e-300;
    let b = sample_training_batch(&model, 20_000, &mut rng).unwrap();
    let (x, _) = model.encode_batch(&b.messages).unwrap();
    for (y, x) in b.comm.iter().zip(&x) {
        assert!((y - x).norm() < 1e-100);
    }
    assert!(b.messages.iter().all(|&m| m < 32));
    let mut seen = [false; 32];
    b.messages.iter().for_each(|&m| seen[m] = true);
    assert!(seen.iter().all(|&s| s));
    // H0 rows are pure noise with power σ²
    let absent: Vec<f64> = b
        .radar
        .iter()
        .zip(&b.targets)
        .filter(|(_, &t)| !t)
        .map(|(z, _)| z.norm_sqr())
        .collect();
    let mean = absent.iter().sum::<f64>() / absent.len() as f64;
    assert!((mean - 0.2).abs() < 0.01, "{mean}");
}

#[test]
fn encoder_gradient_matches_finite_differences() {
    // Every encoder parameter moves the combined loss: the analytic encoder
    // gradient (through the batch power normalization) is checked entrywise.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = IsacAutoencoder::new(&config(0.4), &mut rng).unwrap();
    let step = joint_loss(&model, 16, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let h = 1e-6;
    for (li, layer) in model.encoder.layers.iter().enumerate() {
        for r in 0..layer.weights.nrows() {
            for c in 0..layer.weights.ncols() {
                let mut up = model.clone();
                up.encoder.layers[li].weights[(r, c)] += h;
                let mut dn = model.clone();
                dn.encoder.layers[li].weights[(r, c)] -= h;
                let fd = (joint_loss(&up, 16, &mut ChaCha8Rng::seed_from_u64(9))
                    .unwrap()
                    .loss
                    - joint_loss(&dn, 16, &mut ChaCha8Rng::seed_from_u64(9))
                        .unwrap()
                        .loss)
                    / (2.0 * h);
                let an = step.encoder.layers[li].weights[(r, c)];
                assert!(
                    (fd - an).abs() < 1e-6 * (1.0 + fd.abs()),
                    "layer {li} ({r},{c}): {fd} vs {an}"
                );
            }
        }
    }
    // the decoder and detector gradients carry their loss weights
    let mut up = model.clone();
    up.radar_detector.layers[3].bias[0] += h;
    let mut dn = model.clone();
    dn.radar_detector.layers[3].bias[0] -= h;
    let fd = (joint_loss(&up, 16, &mut ChaCha8Rng::seed_from_u64(9))
        .unwrap()
        .loss
        - joint_loss(&dn, 16, &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap()
            .loss)
        / (2.0 * h);
    assert!((fd - step.radar_detector.layers[3].bias[0]).abs() < 1e-6);
}

#[test]
fn training_rejects_bad_eta_and_is_reproducible() {
    assert!(matches!(
        train_isac_ae(&config(1.2)),
        Err(Error::InvalidParameter { .. })
    ));
    let (a, _) = train_isac_ae(&config(0.3)).unwrap();
    let (b, _) = train_isac_ae(&config(0.3)).unwrap();
    assert_eq!(
        extract_constellation(&a).unwrap(),
        extract_constellation(&b).unwrap()
    );
}

#[test]
fn extracted_constellation_is_normalized_and_labelled() {
    let mut cfg = config(0.5);
    cfg.bits = 5;
    let (model, _) = train_isac_ae(&cfg).unwrap();
    let c = extract_constellation(&model).unwrap();
    assert_eq!(c.len(), 32);
    assert!((c.average_power() - 1.0).abs() < 1e-6);
    let mut labels = c.labels.clone();
    labels.sort_unstable();
    assert_eq!(labels, (0..32).collect::<Vec<_>>());
    let probs = model.detect(&c.points).unwrap();
    assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));
}

#[test]
fn noiseless_channel_has_no_symbol_errors() {
    let psk = baseline_constellation(BaselineKind::Psk, 32).unwrap();
    let cal = Calibration {
        comm_noise_var: 1e-30,
        radar_noise_var: 0.1,
        threshold: 0.5,
    };
    assert_eq!(evaluate_constellation(&psk, &cal, 10_000, 1).ser, 0.0);
}

#[test]
fn psk_detection_matches_the_energy_detector() {
    // For a constant-modulus set at high SNR the posterior is nearly a
    // function of |z|, so thresholding it at the H0 quantile reproduces the
    // Marcum-Q curve of the energy detector: Pfa = exp(−γ), and at
    // |x|²/σ² = 10, γ = 4 the H1 miss probability is 1 − Q1(√20, √8).
    let psk = baseline_constellation(BaselineKind::Psk, 32).unwrap();
    let sigma2 = 0.1;
    let r = (4.0f64 * sigma2).sqrt();
    let threshold = presence_posterior(&psk, Complex64::new(r, 0.0), sigma2);
    let cal = Calibration {
        comm_noise_var: 1.0,
        radar_noise_var: sigma2,
        threshold,
    };
    let m = evaluate_constellation(&psk, &cal, 200_000, 3);
    assert!((m.pfa - (-4.0f64).exp()).abs() < 0.003, "pfa {}", m.pfa);
    // Q1(√20, √8) by series: Σ_k e^{-(a²+b²)/2} (a/b)^k I_k(ab)
    let q1 = marcum_q1(20f64.sqrt(), 8f64.sqrt());
    assert!((m.pd - q1).abs() < 0.005, "pd {} vs {q1}", m.pd);
}

fn marcum_q1(a: f64, b: f64) -> f64 {
    // 1 − Q1(a, b) = e^{−(a²+b²)/2} Σ_{k≥1} (b/a)^k I_k(ab)
    let x = a * b;
    let bessel = |k: i32| {
        // I_k(x) by its power series
        let mut term = (x / 2.0).powi(k) / (1..=k).map(f64::from).product::<f64>();
        let mut sum = term;
        for j in 1..200 {
            term *= (x / 2.0).powi(2) / (j as f64 * (j + k) as f64);
            sum += term;
        }
        sum
    };
    let miss: f64 =
        (1..80).map(|k| (b / a).powi(k) * bessel(k)).sum::<f64>() * (-(a * a + b * b) / 2.0).exp();
    1.0 - miss
}

#[test]
fn calibration_hits_its_targets() {
    let psk = baseline_constellation(BaselineKind::Psk, 32).unwrap();
    let target = CalibrationTarget {
        ser: 10f64.powf(-0.49),
        pd: 0.935,
        pfa: 0.0085,
    };
    let cal = calibrate(&psk, &target, 100_000, 5).unwrap();
    let m = evaluate_constellation(&psk, &cal, 100_000, 77);
    assert!((m.ser.log10() + 0.49).abs() < 0.05, "{m:?}");
    assert!((m.pd - 0.935).abs() < 0.01, "{m:?}");
    assert!((m.pfa - 0.0085).abs() < 0.002, "{m:?}");
}

#[test]
fn csv_round_trip_and_rejections() {
    let qam = baseline_constellation(BaselineKind::Qam, 16).unwrap();
    let text = qam.to_csv();
    assert!(text.starts_with("label,re,im\n"));
    let back = Constellation::from_csv(&text).unwrap();
    for l in 0..16 {
        assert!((back.point_for(l).unwrap() - qam.point_for(l).unwrap()).norm() < 1e-8);
    }
    assert!(Constellation::from_csv("label,re,im\n0,2.0,0\n").is_err());
    assert!(Constellation::from_csv("label,re,im\n0,1,0\n0,-1,0\n").is_err());
    assert!(Constellation::from_csv("a,b,c\n0,1,0\n").is_err());
    assert!(Constellation::from_csv("").is_err());
}

proptest! {
    #[test]
    fn csv_parser_never_panics(text in ".{0,200}") {
        let _ = Constellation::from_csv(&text);
    }
}
