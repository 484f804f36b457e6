#![no_main]

use libfuzzer_sys::fuzz_target;
use reinit_bench::formats::{format_dataset, parse_dissimilarity, Dataset};

// Accepted input must survive a format/parse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(parsed) = parse_dissimilarity(text) {
            let dataset = Dataset::Dissimilarity(parsed);
            let again = format_dataset(&dataset);
            assert_eq!(reinit_bench::formats::parse_dataset(&again, dataset.kind()).unwrap(), dataset);
        }
    }
});
