use isac_core::channel::{ArrayGeometry, ChannelMatrix, RicianParams};
use isac_core::linalg::{complex_gaussian_matrix, CMat};
use isac_core::neural::TrainConfig;
use isac_core::waveform_learn::*;
use isac_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(m: usize, k: usize, tau: usize) -> DatasetConfig {
    DatasetConfig {
        num_antennas: m,
        frame_len: tau,
        power: 1.0,
        rician_factors: vec![1.5; k],
        large_scale_gain: 1.0,
        angle_range: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        reference: ReferenceKind::Omni,
    }
}

fn random_sample(m: usize, k: usize, tau: usize, rng: &mut ChaCha8Rng) -> WaveformSample {
    WaveformSample {
        channel: ChannelMatrix {
            entries: complex_gaussian_matrix(k, m, rng),
            per_user_params: vec![RicianParams::new(1.0, 1.0, 0.0).unwrap(); k],
        },
        d: complex_gaussian_matrix(k, tau, rng),
        x0: complex_gaussian_matrix(m, tau, rng),
    }
}

#[test]
fn feature_width_matches_architecture() {
    let data = generate_dataset(&config(16, 4, 10), 2, 1).unwrap();
    let f = build_features(&data[0]).unwrap();
    assert_eq!(f.len(), 528);
    let spec = WaveformNetSpec::of_sample(&data[0]);
    assert_eq!(spec.widths(), [528, 5280, 2640, 320]);
    // first block is Re vec(H) in column-major order
    assert_eq!(f[1], data[0].channel.entries[(1, 0)].re);
    assert_eq!(f[4], data[0].channel.entries[(0, 1)].re);
}

#[test]
fn projection_examples() {
    // inside the ball: unchanged
    let raw = [0.5, 0.0, 0.0, 0.5];
    let x = power_projection(&raw, 1.0, 1, 2).unwrap();
    assert_eq!(x[(0, 0)], Complex64::new(0.5, 0.0));
    assert_eq!(x[(0, 1)], Complex64::new(0.0, 0.5));
    // outside: scaled onto ‖X‖² = τP
    let raw = [3.0, 0.0, 0.0, 4.0];
    let x = power_projection(&raw, 2.0, 1, 2).unwrap();
    assert!((x.norm_squared() - 4.0).abs() < 1e-12);
    assert!((x[(0, 0)].re - 3.0 * 2.0 / 5.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_feasible(raw in prop::collection::vec(-5.0f64..5.0, 12), power in 0.1f64..3.0) {
        let x = power_projection(&raw, power, 2, 3).unwrap();
        prop_assert!(x.norm_squared() <= 3.0 * power * (1.0 + 1e-12));
        let again = power_projection(&stack_waveform(&x), power, 2, 3).unwrap();
        prop_assert!((again - &x).norm() < 1e-12);
    }

    #[test]
    fn stacking_round_trips(raw in prop::collection::vec(-5.0f64..5.0, 24)) {
        let x = unstack_waveform(&raw, 3, 4).unwrap();
        prop_assert_eq!(stack_waveform(&x), raw);
    }
}

#[test]
fn raw_loss_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<_> = (0..3).map(|_| random_sample(3, 2, 2, &mut rng)).collect();
    let refs: Vec<&WaveformSample> = samples.iter().collect();
    for (eta, scale) in [(0.3, 0.3), (0.8, 2.0)] {
        // scale 2.0 puts every row on the projected branch
        let outputs = DMatrix::from_fn(3, 12, |r, c| scale * (((r * 12 + c) as f64 * 0.77).sin()));
        let (_, grad) = raw_output_loss(&outputs, &refs, eta, 1.0).unwrap();
        let h = 1e-6;
        for r in 0..3 {
            for c in 0..12 {
                let mut up = outputs.clone();
                up[(r, c)] += h;
                let mut dn = outputs.clone();
                dn[(r, c)] -= h;
                let fd = (raw_output_loss(&up, &refs, eta, 1.0).unwrap().0
                    - raw_output_loss(&dn, &refs, eta, 1.0).unwrap().0)
                    / (2.0 * h);
                assert!(
                    (fd - grad[(r, c)]).abs() < 1e-6,
                    "eta {eta} ({r},{c}): fd {fd} vs {}",
                    grad[(r, c)]
                );
            }
        }
    }
}

#[test]
fn loss_rejects_bad_eta() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = random_sample(2, 1, 2, &mut rng);
    let x = CMat::zeros(2, 2);
    assert!(matches!(
        isac_waveform_loss(&[x], &[&s], 1.5),
        Err(Error::InvalidParameter { .. })
    ));
}

#[test]
fn loss_extremes_reduce_to_single_objectives() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = random_sample(3, 2, 4, &mut rng);
    let x = complex_gaussian_matrix(3, 4, &mut rng);
    let comm = (&s.channel.entries * &x - &s.d).norm_squared();
    let sens = (&x - &s.x0).norm_squared();
    assert!((isac_waveform_loss(std::slice::from_ref(&x), &[&s], 1.0).unwrap().0 - comm).abs() < 1e-12);
    assert!((isac_waveform_loss(&[x], &[&s], 0.0).unwrap().0 - sens).abs() < 1e-12);
}

#[test]
fn generated_references_meet_power_and_are_reproducible() {
    let cfg = config(8, 2, 8);
    let a = generate_dataset(&cfg, 6, 42).unwrap();
    let b = generate_dataset(&cfg, 6, 42).unwrap();
    assert_eq!(a, b);
    for s in &a {
        assert!((s.x0.norm_squared() - 8.0).abs() < 1e-9);
        for z in s.d.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }
    let geom = ArrayGeometry::half_wavelength(8).unwrap();
    assert_eq!(a[0].num_antennas(), geom.num_antennas());
}

#[test]
fn dataset_cache_round_trips_and_rejects_truncation() {
    let data = generate_dataset(&config(4, 2, 3), 5, 3).unwrap();
    let bytes = encode_dataset(&data).unwrap();
    assert_eq!(decode_dataset(&bytes).unwrap(), data);
    for cut in [0, 7, 12, 30, bytes.len() - 1] {
        assert!(decode_dataset(&bytes[..cut]).is_err());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.bin");
    save_dataset(&data, &path).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), data);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn dataset_decoder_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode_dataset(&bytes);
    }
}

#[test]
fn split_is_disjoint_and_complete() {
    let s = split_dataset(103, 9);
    assert_eq!(s.train.len(), 61);
    assert_eq!(s.validation.len(), 20);
    let mut all: Vec<usize> = s
        .train
        .iter()
        .chain(&s.validation)
        .chain(&s.test)
        .copied()
        .collect();
    all.sort_unstable();
    assert_eq!(all, (0..103).collect::<Vec<_>>());
}

#[test]
fn training_lowers_held_out_loss() {
    let data = generate_dataset(&config(4, 2, 4), 200, 8).unwrap();
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 20,
        lr: 1e-3,
        early_stop_patience: None,
        seed: 1,
    };
    let trained = train_waveform_net(&data, 0.5, 1.0, &cfg).unwrap();
    let test: Vec<WaveformSample> = trained
        .split
        .test
        .iter()
        .map(|&i| data[i].clone())
        .collect();
    let refs: Vec<&WaveformSample> = test.iter().collect();
    let learned: Vec<CMat> = predict_waveforms(&trained.model, &test, 1.0)
        .unwrap()
        .into_iter()
        .map(|w| w.x)
        .collect();
    let zeros: Vec<CMat> = test.iter().map(|_| CMat::zeros(4, 4)).collect();
    let (l_net, _) = isac_waveform_loss(&learned, &refs, 0.5).unwrap();
    let (l_zero, _) = isac_waveform_loss(&zeros, &refs, 0.5).unwrap();
    assert!(
        l_net < 0.5 * l_zero,
        "net {l_net} vs zero waveform {l_zero}"
    );
    for w in &learned {
        assert!(w.norm_squared() <= 4.0 + 1e-9);
    }
}

#[test]
fn small_dataset_is_rejected() {
    let data = generate_dataset(&config(4, 2, 4), 10, 8).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 20,
        lr: 1e-3,
        early_stop_patience: None,
        seed: 1,
    };
    assert!(train_waveform_net(&data, 0.5, 1.0, &cfg).is_err());
}

#[test]
fn short_frames_get_a_full_power_reference() {
    let data = generate_dataset(&config(16, 4, 10), 3, 1).unwrap();
    for s in &data {
        assert!((s.x0.norm_squared() - 10.0).abs() < 1e-9);
    }
}

#[test]
fn all_zero_sample_gives_zero_features() {
    let s = WaveformSample {
        channel: ChannelMatrix {
            entries: CMat::zeros(2, 3),
            per_user_params: vec![RicianParams::new(1.0, 1.0, 0.0).unwrap(); 2],
        },
        d: CMat::zeros(2, 4),
        x0: CMat::zeros(3, 4),
    };
    let f = build_features(&s).unwrap();
    assert!(f.iter().all(|&v| v == 0.0));
    let n = 2 * (3 + 4) + 12;
    let x0 = unstack_waveform(
        &[&f[2 * n - 24..2 * n - 12], &f[2 * n - 12..]].concat(),
        3,
        4,
    )
    .unwrap();
    assert_eq!(x0, s.x0);
}
