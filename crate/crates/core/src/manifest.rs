//! Run manifest: flat `key = value` text with `[round]` and `[data]`
//! sections.
//!
//! ```text
//! # keys before any header belong to [round]
//! K = 8
//! L = 120
//! epsilon = 10
//!
//! [data]
//! source = synthetic
//! noise_std = 0.05
//! ```
//!
//! `source = csv` reads `client_{k}.csv` for k in 0..K and `test.csv` from
//! `dir`, which is resolved relative to the manifest file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{self, BatchPlan, CsvSchema, FederatedData, SyntheticSpec};
use crate::error::{Error, Result};
use crate::federated::RoundConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic { spec: SyntheticSpec, balance: bool },
    Csv { dir: PathBuf, channels: usize, window: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub round: RoundConfig,
    pub data: DataSource,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            round: RoundConfig::default(),
            data: DataSource::Synthetic {
                spec: SyntheticSpec::default(),
                balance: false,
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Round,
    Data,
}

struct Seen(Vec<(Section, String)>);

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Manifest::parse(&text, base)
    }

    /// Parses manifest text; relative `dir` values are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut round = RoundConfig::default();
        let mut spec = SyntheticSpec::default();
        let mut balance = false;
        let mut source: Option<(usize, String)> = None;
        let mut dir: Option<(usize, PathBuf)> = None;
        let mut section = Section::Round;
        let mut seen = Seen(Vec::new());

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                section = match name.strip_suffix(']').map(str::trim) {
                    Some("round") => Section::Round,
                    Some("data") => Section::Data,
                    _ => return Err(config_error(line_no, format!("unknown section {line}"))),
                };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| config_error(line_no, format!("expected key = value, got {line:?}")))?;
            if key.is_empty() {
                return Err(config_error(line_no, "empty key"));
            }
            if seen.0.iter().any(|(s, k)| *s == section && k == key) {
                return Err(config_error(line_no, format!("duplicate key {key}")));
            }
            seen.0.push((section, key.to_string()));

            match section {
                Section::Round => match key {
                    "K" => round.clients = number(line_no, key, value)?,
                    "L" => round.samples_per_round = number(line_no, key, value)?,
                    "S" => round.classes = number(line_no, key, value)?,
                    "D" => round.dimensions = number(line_no, key, value)?,
                    "R" => round.rounds = number(line_no, key, value)?,
                    "epsilon" => round.epsilon = Some(real(line_no, key, value)?),
                    "basis_seed" => round.basis_seed = number(line_no, key, value)?,
                    "noise_seed" => round.noise_seed = number(line_no, key, value)?,
                    "retrain_epochs" => round.retrain_epochs = number(line_no, key, value)?,
                    _ => return Err(config_error(line_no, format!("unknown [round] key {key}"))),
                },
                Section::Data => match key {
                    "source" => source = Some((line_no, value.to_string())),
                    "dir" => dir = Some((line_no, base.join(value))),
                    "channels" => spec.channels = number(line_no, key, value)?,
                    "window" => spec.window = number(line_no, key, value)?,
                    "client_shift" => spec.client_shift = real(line_no, key, value)?,
                    "class_separation" => spec.class_separation = real(line_no, key, value)?,
                    "noise_std" => spec.noise_std = real(line_no, key, value)?,
                    "base_norm" => spec.base_norm = real(line_no, key, value)?,
                    "seed" => spec.seed = number(line_no, key, value)?,
                    "test_fraction" => spec.test_fraction = real(line_no, key, value)?,
                    "balance" => balance = number(line_no, key, value)?,
                    _ => return Err(config_error(line_no, format!("unknown [data] key {key}"))),
                },
            }
        }

        spec.classes = round.classes;
        let data = match source {
            None => DataSource::Synthetic { spec, balance },
            Some((_, s)) if s == "synthetic" => DataSource::Synthetic { spec, balance },
            Some((line_no, s)) if s == "csv" => {
                let (_, dir) = dir.ok_or_else(|| config_error(line_no, "source = csv needs dir"))?;
                DataSource::Csv {
                    dir,
                    channels: spec.channels,
                    window: spec.window,
                }
            }
            Some((line_no, s)) => {
                return Err(config_error(line_no, format!("unknown data source {s:?}")))
            }
        };
        Ok(Manifest { round, data })
    }

    /// Text form that parses back to `self`, with `dir` written as given.
    pub fn render(&self) -> String {
        let r = &self.round;
        let mut out = String::new();
        let _ = writeln!(out, "[round]");
        let _ = writeln!(out, "K = {}", r.clients);
        let _ = writeln!(out, "L = {}", r.samples_per_round);
        let _ = writeln!(out, "S = {}", r.classes);
        let _ = writeln!(out, "D = {}", r.dimensions);
        let _ = writeln!(out, "R = {}", r.rounds);
        if let Some(eps) = r.epsilon {
            let _ = writeln!(out, "epsilon = {eps}");
        }
        let _ = writeln!(out, "basis_seed = {}", r.basis_seed);
        let _ = writeln!(out, "noise_seed = {}", r.noise_seed);
        let _ = writeln!(out, "retrain_epochs = {}", r.retrain_epochs);
        let _ = writeln!(out, "\n[data]");
        match &self.data {
            DataSource::Synthetic { spec, balance } => {
                let _ = writeln!(out, "source = synthetic");
                let _ = writeln!(out, "channels = {}", spec.channels);
                let _ = writeln!(out, "window = {}", spec.window);
                let _ = writeln!(out, "client_shift = {}", spec.client_shift);
                let _ = writeln!(out, "class_separation = {}", spec.class_separation);
                let _ = writeln!(out, "noise_std = {}", spec.noise_std);
                let _ = writeln!(out, "base_norm = {}", spec.base_norm);
                let _ = writeln!(out, "seed = {}", spec.seed);
                let _ = writeln!(out, "test_fraction = {}", spec.test_fraction);
                let _ = writeln!(out, "balance = {balance}");
            }
            DataSource::Csv { dir, channels, window } => {
                let _ = writeln!(out, "source = csv");
                let _ = writeln!(out, "dir = {}", dir.display());
                let _ = writeln!(out, "channels = {channels}");
                let _ = writeln!(out, "window = {window}");
            }
        }
        out
    }

    /// Materializes the configured data source for R rounds of L samples.
    pub fn load_data(&self) -> Result<FederatedData> {
        let r = &self.round;
        match &self.data {
            DataSource::Synthetic { spec, balance } => data::generate(
                spec,
                r.clients,
                BatchPlan {
                    samples_per_round: r.samples_per_round,
                    rounds: r.rounds,
                    balance: *balance,
                },
            ),
            DataSource::Csv { dir, channels, window } => {
                let schema = CsvSchema {
                    width: channels * window,
                    classes: r.classes,
                };
                let clients = (0..r.clients)
                    .map(|k| data::ingest_csv(dir.join(format!("client_{k}.csv")), schema))
                    .collect::<Result<Vec<_>>>()?;
                let test = data::ingest_csv(dir.join("test.csv"), schema)?;
                Ok(FederatedData::recorded(clients, test, r.samples_per_round))
            }
        }
    }
}

fn config_error(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_error(line, format!("invalid value {value:?} for {key}")))
}

fn real(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = number(line, key, value)?;
    if !v.is_finite() {
        return Err(config_error(line, format!("{key} must be finite, got {value}")));
    }
    Ok(v)
}
