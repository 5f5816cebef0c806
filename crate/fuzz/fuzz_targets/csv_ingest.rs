#![no_main]

use fedhd_core::data::{ingest_csv_reader, CsvSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let schema = CsvSchema { width: 3, classes: 3 };
    if let Ok(samples) = ingest_csv_reader(data, schema) {
        for s in samples {
            assert_eq!(s.features.len(), 3);
            assert!(s.label < 3);
            assert!(s.features.iter().all(|v| v.is_finite()));
        }
    }
});
