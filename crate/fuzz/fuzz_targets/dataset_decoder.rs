#![no_main]
use isac_core::waveform_learn::{decode_dataset, encode_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(samples) = decode_dataset(data) {
        let again = encode_dataset(&samples).expect("decoded samples re-encode");
        assert_eq!(
            decode_dataset(&again).expect("re-encoded cache decodes"),
            samples
        );
    }
});
