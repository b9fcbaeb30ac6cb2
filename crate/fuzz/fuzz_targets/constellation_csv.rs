#![no_main]
use isac_core::constellation_ae::Constellation;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(c) = Constellation::from_csv(text) {
        // accepted sets are normalized, so the metrics are finite
        assert!(c.amplitude_spread().is_finite());
        let _ = c.nearest(num_complex::Complex64::new(0.5, -0.5));
    }
});
