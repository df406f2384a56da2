#![no_main]

use kzsparse::harness::config::{config_from_str, RunMode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = config_from_str(text, true, &[]) {
            for mode in [
                RunMode::Curve,
                RunMode::Phase,
                RunMode::Ablation,
                RunMode::PeriodSweep,
            ] {
                let _ = config.validate(mode);
            }
        }
    }
});
