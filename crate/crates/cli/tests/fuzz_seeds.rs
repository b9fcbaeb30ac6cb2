//! Replays the checked-in fuzz corpus through the same decoders the fuzz
//! targets drive, so a seed that stops round-tripping fails here too.

use std::fs;
use std::path::{Path, PathBuf};

use isac_core::constellation_ae::Constellation;
use isac_core::neural::MlpModel;
use isac_core::waveform_learn::{decode_dataset, encode_dataset};

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds for {target}");
    files
}

#[test]
fn config_seeds_parse_or_fail_cleanly() {
    let mut valid = 0;
    for path in seeds("config_parser") {
        let text = fs::read_to_string(&path).unwrap();
        if let Ok(config) = isac_cli::parse_config(&text) {
            if isac_cli::validate(&config).is_empty() {
                valid += 1;
            }
        }
    }
    assert!(valid >= 8);
}

#[test]
fn model_seeds_round_trip() {
    for path in seeds("model_decoder") {
        let bytes = fs::read(&path).unwrap();
        let model = MlpModel::from_bytes(&bytes).unwrap();
        assert_eq!(model.to_bytes(), bytes, "{}", path.display());
        assert!(MlpModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}

#[test]
fn dataset_seeds_round_trip() {
    for path in seeds("dataset_decoder") {
        let bytes = fs::read(&path).unwrap();
        let samples = decode_dataset(&bytes).unwrap();
        assert_eq!(
            encode_dataset(&samples).unwrap(),
            bytes,
            "{}",
            path.display()
        );
        assert!(decode_dataset(&bytes[..bytes.len() / 2]).is_err());
    }
}

#[test]
fn constellation_seeds_round_trip() {
    for path in seeds("constellation_csv") {
        let text = fs::read_to_string(&path).unwrap();
        let c = Constellation::from_csv(&text).unwrap();
        assert_eq!(c.to_csv(), text, "{}", path.display());
    }
}
