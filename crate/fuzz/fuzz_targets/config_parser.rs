#![no_main]
//! Arbitrary bytes as an experiment config. Parsing and validation must
//! return errors or diagnostics, never panic.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = isac_cli::parse_config(text) {
            let _ = isac_cli::validate(&config);
        }
    }
});
