#![no_main]

use std::path::Path;

use fedhd_core::manifest::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = Manifest::parse(text, Path::new("/fuzz")) {
            // Rendering must parse back to the same manifest.
            let again = Manifest::parse(&m.render(), Path::new("/")).expect("rendered manifest parses");
            assert_eq!(again.round, m.round);
        }
    }
});
