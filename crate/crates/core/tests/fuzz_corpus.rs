//! Replays the checked-in fuzz seeds through the same checks as the fuzz
//! targets, so the corpus stays meaningful without a fuzzing toolchain.

use std::fs;
use std::path::{Path, PathBuf};

use fedhd_core::data::{ingest_csv_reader, CsvSchema};
use fedhd_core::manifest::Manifest;
use fedhd_core::snapshot::Snapshot;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn manifest_seeds() {
    let mut parsed = 0;
    for (path, bytes) in seeds("manifest") {
        let text = String::from_utf8(bytes).unwrap();
        if let Ok(m) = Manifest::parse(&text, Path::new("/fuzz")) {
            let again = Manifest::parse(&m.render(), Path::new("/")).unwrap();
            assert_eq!(again.round, m.round, "{}", path.display());
            parsed += 1;
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn csv_seeds() {
    let schema = CsvSchema { width: 3, classes: 3 };
    let mut outcomes = Vec::new();
    for (path, bytes) in seeds("csv_ingest") {
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        outcomes.push((name, ingest_csv_reader(bytes.as_slice(), schema).map(|s| s.len()).ok()));
    }
    let get = |n: &str| outcomes.iter().find(|(k, _)| k == n).unwrap().1;
    assert_eq!(get("valid.csv"), Some(2));
    assert_eq!(get("header_only.csv"), Some(0));
    assert_eq!(get("text_field.csv"), None);
    assert_eq!(get("bad_rows.csv"), None);
    assert_eq!(get("wrong_header.csv"), None);
}

#[test]
fn snapshot_seeds() {
    let mut decoded = 0;
    for (path, bytes) in seeds("snapshot") {
        if let Ok(s) = Snapshot::decode(&bytes) {
            assert_eq!(s.encode(), bytes, "{}", path.display());
            decoded += 1;
        }
    }
    assert_eq!(decoded, 2);
}
