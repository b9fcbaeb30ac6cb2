#![no_main]
use isac_core::neural::MlpModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // A model that decodes must survive a re-encode round trip.
    if let Ok(model) = MlpModel::from_bytes(data) {
        assert_eq!(model.to_bytes(), data);
    }
});
