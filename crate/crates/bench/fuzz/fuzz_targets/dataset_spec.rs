#![no_main]

use libfuzzer_sys::fuzz_target;
use reinit_bench::generate::{generate_dataset, DatasetSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<DatasetSpec>(data) else {
        return;
    };
    // Keep generation cheap; the size guard is the fuzzer's, not the library's.
    let size = match &spec {
        DatasetSpec::GaussianClusters { n, dim, .. } => n.saturating_mul(*dim),
        DatasetSpec::Bitstring { length } => *length,
        DatasetSpec::RbmPatterns { n_visible, n_samples, .. } => n_visible.saturating_mul(*n_samples),
        DatasetSpec::Dissimilarity { n, dim, .. } => n.saturating_mul(*n).saturating_mul(*dim),
    };
    if size <= 1 << 14 {
        let _ = generate_dataset(&spec, 0);
    }
});
