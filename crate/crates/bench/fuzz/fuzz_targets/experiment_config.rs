#![no_main]

use libfuzzer_sys::fuzz_target;
use reinit_bench::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_json(text) {
            let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(cfg.hash(), again.hash());
        }
    }
});
