#![no_main]

use kzsparse::harness::config::{apply_overrides, ExperimentConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = match std::str::from_utf8(data) {
        Ok(t) => t,
        Err(_) => return,
    };
    let overrides: Vec<String> = text.lines().take(32).map(|l| l.to_string()).collect();
    let mut value = serde_json::json!({
        "matrix": {"kind": "bernoulli", "m": 4, "n": 8},
        "signal": {"s": [1]},
        "solver": {"name": "iht"},
        "base_seed": 0
    });
    if apply_overrides(&mut value, &overrides).is_ok() {
        let _ = serde_json::from_value::<ExperimentConfig>(value);
    }
});
