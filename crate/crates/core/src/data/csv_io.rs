use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::LabeledSample;

/// Expected layout: header `f0,...,f{width-1},label`, then one sample per
/// row with labels in `[0, classes)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvSchema {
    pub width: usize,
    pub classes: usize,
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<Vec<LabeledSample>> {
    ingest_csv_reader(File::open(path)?, schema)
}

/// Parses samples from any reader. Row numbers in errors are 1-based file
/// lines, the header being line 1.
pub fn ingest_csv_reader<R: Read>(reader: R, schema: CsvSchema) -> Result<Vec<LabeledSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| located(e, 1))?.clone();
    if header.is_empty() {
        return Ok(Vec::new());
    }
    let expected = expected_header(schema.width);
    if header.len() != expected.len() || header.iter().zip(&expected).any(|(a, b)| a.trim() != b) {
        return Err(Error::Parse {
            row: 1,
            message: format!(
                "header must be f0..f{},label ({} columns), found {} columns",
                schema.width.saturating_sub(1),
                expected.len(),
                header.len()
            ),
        });
    }

    let mut samples = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let row_hint = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(located(e, row_hint)),
        }
        let row = record.position().map_or(row_hint, |p| p.line());
        if record.len() != schema.width + 1 {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", schema.width + 1, record.len()),
            });
        }
        let mut features = Vec::with_capacity(schema.width);
        for (col, field) in record.iter().take(schema.width).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                row,
                message: format!("column f{col}: {field:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("column f{col}: non-finite value {field:?}"),
                });
            }
            features.push(value);
        }
        let raw_label = &record[schema.width];
        let label: usize = raw_label.trim().parse().map_err(|_| Error::Parse {
            row,
            message: format!("label {raw_label:?} is not a class index"),
        })?;
        if label >= schema.classes {
            return Err(Error::invalid(format!(
                "row {row}: label {label} out of range for {} classes",
                schema.classes
            )));
        }
        samples.push(LabeledSample { features, label });
    }
    Ok(samples)
}

/// Writes samples under the ingestion schema. Values use Rust's shortest
/// round-trip formatting, so ingesting the output reproduces them exactly.
pub fn write_csv<W: Write>(writer: W, samples: &[LabeledSample], width: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(expected_header(width)).map_err(Error::from_csv)?;
    let mut fields = Vec::with_capacity(width + 1);
    for s in samples {
        if s.features.len() != width {
            return Err(Error::dimension("csv row", width, s.features.len()));
        }
        fields.clear();
        fields.extend(s.features.iter().map(f64::to_string));
        fields.push(s.label.to_string());
        out.write_record(&fields).map_err(Error::from_csv)?;
    }
    out.flush()?;
    Ok(())
}

fn expected_header(width: usize) -> Vec<String> {
    (0..width)
        .map(|i| format!("f{i}"))
        .chain(std::iter::once("label".to_string()))
        .collect()
}

fn located(e: csv::Error, fallback_row: u64) -> Error {
    let row = e.position().map_or(fallback_row, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => Error::Parse {
            row,
            message: format!("invalid UTF-8: {err}"),
        },
        other => Error::Parse {
            row,
            message: format!("{other:?}"),
        },
    }
}
