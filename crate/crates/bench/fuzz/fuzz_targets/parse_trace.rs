#![no_main]

use libfuzzer_sys::fuzz_target;
use reinit_bench::trace::{format_trace, parse_trace};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(records) = parse_trace(text) {
            assert_eq!(parse_trace(&format_trace(&records)).unwrap(), records);
        }
    }
});
