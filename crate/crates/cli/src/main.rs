//! `fedhd` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

mod svg;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use fedhd_core::analysis::{self, noise_curve, reconstruct, reconstruction_study, similarity_distance, study_stream};
use fedhd_core::data::{self, smooth_signals, BatchPlan, CsvSchema};
use fedhd_core::federated::{self, write_metrics_csv};
use fedhd_core::hd::{Decoder, EncoderBasis};
use fedhd_core::manifest::{DataSource, Manifest};
use fedhd_core::snapshot::Snapshot;
use fedhd_core::{Error, NoiseLedger, PrivacyParams};

use svg::{chart, Series, Style};

#[derive(Parser)]
#[command(name = "fedhd", version, about = "Federated hyperdimensional learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fedhd,
    Fedhdprivacy,
}

#[derive(Subcommand)]
enum Command {
    /// Run a federated training experiment.
    Run {
        /// Run manifest; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, env = "FEDHD_OUT")]
        out: PathBuf,
    },
    /// Tabulate client and server noise levels per round.
    NoiseCurves {
        /// Client counts, comma separated.
        #[arg(long = "K", value_delimiter = ',', required = true)]
        clients: Vec<u64>,
        #[arg(long = "L")]
        samples_per_round: u64,
        #[arg(long)]
        rounds: u64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long = "D", default_value_t = 10_000)]
        dimensions: u64,
        #[arg(long, env = "FEDHD_OUT")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Raw distance against hypervector similarity, within and across clients.
    Analyze {
        /// Directory of client_{k}.csv files.
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        data: Option<PathBuf>,
        /// Use the manifest's synthetic generator.
        #[arg(long)]
        synthetic: bool,
        /// Manifest for D, basis seed and data shape.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides K for synthetic data.
        #[arg(long)]
        clients: Option<usize>,
        /// Samples used per client.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = analysis::DEFAULT_BINS)]
        bins: usize,
        #[arg(long, env = "FEDHD_OUT")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Mean reconstruction PSNR over smooth signals for a ladder of noise variances.
    Reconstruct {
        /// Noise variances, ascending, starting at 0.
        #[arg(long, value_delimiter = ',', required = true)]
        noise: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        signals: usize,
        #[arg(long, default_value_t = 9)]
        channels: usize,
        #[arg(long, default_value_t = 10)]
        window: usize,
        /// Hypervector dimension as a multiple of the signal width.
        #[arg(long, default_value_t = 1.5)]
        ratio: f64,
        /// Euclidean norm of each signal.
        #[arg(long, default_value_t = 0.85)]
        norm: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "FEDHD_OUT")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Write a synthetic data set as CSV plus a manifest that runs on it.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, env = "FEDHD_OUT")]
        out: PathBuf,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidArgument(_) | Error::Underdetermined { .. } => {
                Failure::Usage(e.into())
            }
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, mode, out } => run(config.as_deref(), mode, &out),
        Command::NoiseCurves { clients, samples_per_round, rounds, epsilon, dimensions, out, svg } => {
            noise_curves(&clients, samples_per_round, rounds, epsilon, dimensions, &out, svg)
        }
        Command::Analyze { data, synthetic: _, config, clients, samples, bins, out, svg } => {
            analyze(data.as_deref(), config.as_deref(), clients, samples, bins, &out, svg)
        }
        Command::Reconstruct { noise, signals, channels, window, ratio, norm, seed, out, svg } => {
            reconstruct_cmd(&noise, signals, channels, window, ratio, norm, seed, &out, svg)
        }
        Command::GenData { spec, out } => gen_data(&spec, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_manifest(path: Option<&Path>) -> Result<Manifest, Failure> {
    match path {
        None => Ok(Manifest::default()),
        Some(p) => Manifest::load(p).map_err(|e| {
            Failure::Usage(anyhow::Error::from(e).context(format!("reading config {}", p.display())))
        }),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = out.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_svg(out: &Path, name: &str, body: String) -> Outcome {
    let path = out.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn prepare_out(out: &Path) -> Outcome {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    Ok(())
}

fn run(config: Option<&Path>, mode: Mode, out: &Path) -> Outcome {
    let mut manifest = load_manifest(config)?;
    match mode {
        Mode::Fedhd => manifest.round.epsilon = None,
        Mode::Fedhdprivacy if manifest.round.epsilon.is_none() => {
            return Err(Failure::Usage(anyhow!("mode fedhdprivacy needs epsilon in the config")));
        }
        Mode::Fedhdprivacy => {}
    }
    manifest.round.validate()?;
    let mut data = manifest.load_data()?;
    let output = federated::run(&manifest.round, &mut data)?;

    prepare_out(out)?;
    let mut metrics = create(out, "metrics.csv")?;
    write_metrics_csv(&output.metrics, &mut metrics)?;
    metrics.flush()?;
    let mut ledger = create(out, "ledger.csv")?;
    output.ledger.write_csv(&mut ledger)?;
    ledger.flush()?;
    let r = &manifest.round;
    let snapshot = Snapshot {
        model: output.global_model,
        clients: r.clients as u64,
        round: r.rounds as u64,
        basis_seed: r.basis_seed,
        noise_seed: r.noise_seed,
    };
    fs::write(out.join("model.snap"), snapshot.encode()).context("writing model.snap")?;

    if let Some(last) = output.metrics.last() {
        println!("round {} test accuracy {:.4}", last.round, last.test_accuracy);
    }
    Ok(())
}

fn noise_curves(
    clients: &[u64],
    samples_per_round: u64,
    rounds: u64,
    epsilon: f64,
    dimensions: u64,
    out: &Path,
    svg: bool,
) -> Outcome {
    if rounds == 0 {
        return Err(Failure::Usage(anyhow!("--rounds must be at least 1")));
    }
    let params = clients
        .iter()
        .map(|&k| PrivacyParams::new(epsilon, dimensions, k, samples_per_round))
        .collect::<Result<Vec<_>, _>>()?;
    prepare_out(out)?;
    for p in &params {
        let k = p.clients();
        let rows = noise_curve(p, rounds)?;
        let mut w = csv_writer(create(out, &format!("noise_curves_K{k}.csv"))?);
        w.write_record([
            "round",
            "client_required_var",
            "client_cumulative_var",
            "client_incremental_var",
            "server_required_var",
            "server_cumulative_var",
            "gamma",
        ])
        .map_err(anyhow::Error::from)?;
        for r in &rows {
            w.write_record([
                r.round.to_string(),
                r.client_required.to_string(),
                r.client_cumulative.to_string(),
                r.client_incremental.to_string(),
                r.server_required.to_string(),
                r.server_cumulative.to_string(),
                r.gamma.to_string(),
            ])
            .map_err(anyhow::Error::from)?;
        }
        w.flush()?;
        let mut ledger = create(out, &format!("ledger_K{k}.csv"))?;
        NoiseLedger::for_rounds(p, rounds)?.write_csv(&mut ledger)?;
        ledger.flush()?;

        if svg {
            let pick = |f: fn(&analysis::NoiseCurveRow) -> f64| {
                rows.iter().map(|r| (r.round as f64, f(r))).collect::<Vec<_>>()
            };
            let series = [
                Series { name: "client required", points: pick(|r| r.client_required) },
                Series { name: "client cumulative", points: pick(|r| r.client_cumulative) },
                Series { name: "client added", points: pick(|r| r.client_incremental) },
                Series { name: "server required", points: pick(|r| r.server_required) },
                Series { name: "server cumulative", points: pick(|r| r.server_cumulative) },
            ];
            let title = format!("Noise variance, K = {k}, L = {samples_per_round}");
            write_svg(out, &format!("noise_curves_K{k}.svg"), chart(&title, "round", "variance", &series, Style::Lines))?;
        }
    }
    Ok(())
}

fn analyze(
    data_dir: Option<&Path>,
    config: Option<&Path>,
    clients: Option<usize>,
    samples: usize,
    bins: usize,
    out: &Path,
    svg: bool,
) -> Outcome {
    let manifest = load_manifest(config)?;
    if samples < 2 {
        return Err(Failure::Usage(anyhow!("--samples must be at least 2")));
    }
    let per_client: Vec<Vec<Vec<f64>>> = match data_dir {
        Some(dir) => {
            let (channels, window) = match &manifest.data {
                DataSource::Synthetic { spec, .. } => (spec.channels, spec.window),
                DataSource::Csv { channels, window, .. } => (*channels, *window),
            };
            let schema = CsvSchema { width: channels * window, classes: manifest.round.classes };
            let mut sets = Vec::new();
            loop {
                let path = dir.join(format!("client_{}.csv", sets.len()));
                if !path.exists() {
                    break;
                }
                let samples_k = data::ingest_csv(&path, schema)?;
                sets.push(samples_k.into_iter().take(samples).map(|s| s.features).collect());
            }
            sets
        }
        None => {
            let DataSource::Synthetic { spec, .. } = &manifest.data else {
                return Err(Failure::Usage(anyhow!("--synthetic needs a synthetic data source")));
            };
            let k = clients.unwrap_or(manifest.round.clients);
            let plan = BatchPlan { samples_per_round: samples, rounds: 1, balance: false };
            let mut generated = data::generate(spec, k, plan)?;
            generated
                .clients
                .iter_mut()
                .map(|c| Ok(c.next_batch()?.into_iter().map(|s| s.features).collect()))
                .collect::<Result<_, Error>>()?
        }
    };
    let width = per_client
        .iter()
        .flatten()
        .next()
        .map(Vec::len)
        .ok_or_else(|| Failure::Usage(anyhow!("no samples to analyze")))?;
    let basis = EncoderBasis::new(manifest.round.dimensions, width, manifest.round.basis_seed)?;
    let report = similarity_distance(&per_client, &basis, bins)?;

    prepare_out(out)?;
    let mut summary = csv_writer(create(out, "spearman.csv")?);
    summary.write_record(["client", "spearman"]).map_err(anyhow::Error::from)?;
    for (k, cloud) in report.clouds.iter().enumerate() {
        let mut w = csv_writer(create(out, &format!("cloud_client{k}.csv"))?);
        w.write_record(["distance", "similarity"]).map_err(anyhow::Error::from)?;
        for p in cloud {
            w.write_record([p.distance.to_string(), p.similarity.to_string()]).map_err(anyhow::Error::from)?;
        }
        w.flush()?;
        let (d, s): (Vec<f64>, Vec<f64>) = cloud.iter().map(|p| (p.distance, p.similarity)).unzip();
        let rho = analysis::spearman(&d, &s)?;
        summary.write_record([k.to_string(), rho.to_string()]).map_err(anyhow::Error::from)?;
    }
    summary.flush()?;
    for (prefix, hists) in [("similarity_hist", &report.similarity), ("distance_hist", &report.distance)] {
        for h in hists {
            let mut w = csv_writer(create(out, &format!("{prefix}_{}_{}.csv", h.first, h.second))?);
            w.write_record(["bin_lo", "bin_hi", "mass"]).map_err(anyhow::Error::from)?;
            for (b, m) in h.histogram.mass.iter().enumerate() {
                let (lo, hi) = h.histogram.bin_edges(b);
                w.write_record([lo.to_string(), hi.to_string(), m.to_string()]).map_err(anyhow::Error::from)?;
            }
            w.flush()?;
        }
    }
    if svg {
        let names: Vec<String> = (0..report.clouds.len()).map(|k| format!("client {k}")).collect();
        let series: Vec<Series<'_>> = report
            .clouds
            .iter()
            .zip(&names)
            .map(|(c, n)| Series { name: n, points: c.iter().map(|p| (p.distance, p.similarity)).collect() })
            .collect();
        write_svg(out, "clouds.svg", chart("Similarity against distance", "Euclidean distance", "cosine similarity", &series, Style::Dots))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn reconstruct_cmd(
    noise: &[f64],
    signals: usize,
    channels: usize,
    window: usize,
    ratio: f64,
    norm: f64,
    seed: u64,
    out: &Path,
    svg: bool,
) -> Outcome {
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return Err(Failure::Usage(anyhow!("--ratio must be at least 1")));
    }
    let width = channels * window;
    let dimensions = (ratio * width as f64).round() as usize;
    let corpus = smooth_signals(channels, window, signals, norm, seed)?;
    let basis = EncoderBasis::new(dimensions, width, seed)?;
    let study = reconstruction_study(&basis, &corpus, noise, seed)?;

    prepare_out(out)?;
    let mut w = csv_writer(create(out, "psnr.csv")?);
    w.write_record(["noise_var", "mean_psnr_db"]).map_err(anyhow::Error::from)?;
    for (v, p) in study.noise_levels.iter().zip(&study.psnr_db) {
        w.write_record([v.to_string(), p.to_string()]).map_err(anyhow::Error::from)?;
    }
    w.flush()?;

    // Reconstructions of the first signal, using the same noise draws as the study.
    let decoder = Decoder::new(&basis)?;
    let x = &corpus[0];
    let recon = noise
        .iter()
        .enumerate()
        .map(|(level, &var)| reconstruct(&basis, &decoder, x, var, &mut study_stream(seed, level, 0)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv_writer(create(out, "reconstruction.csv")?);
    let header: Vec<String> = ["index".to_string(), "original".to_string()]
        .into_iter()
        .chain(noise.iter().map(|v| format!("var_{v}")))
        .collect();
    w.write_record(&header).map_err(anyhow::Error::from)?;
    for i in 0..width {
        let row: Vec<String> = [i.to_string(), x[i].to_string()]
            .into_iter()
            .chain(recon.iter().map(|r| r.values[i].to_string()))
            .collect();
        w.write_record(&row).map_err(anyhow::Error::from)?;
    }
    w.flush()?;

    if svg {
        let names: Vec<String> = noise.iter().map(|v| format!("noise var {v}")).collect();
        let mut series = vec![Series { name: "original", points: x.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect() }];
        series.extend(recon.iter().zip(&names).map(|(r, n)| Series {
            name: n,
            points: r.values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
        }));
        write_svg(out, "reconstruction.svg", chart("Original and reconstructed signal", "feature", "value", &series, Style::Lines))?;
    }
    for (v, p) in study.noise_levels.iter().zip(&study.psnr_db) {
        println!("noise var {v}: mean PSNR {p:.2} dB");
    }
    Ok(())
}

fn gen_data(spec_path: &Path, out: &Path) -> Outcome {
    let manifest = load_manifest(Some(spec_path))?;
    let DataSource::Synthetic { spec, .. } = &manifest.data else {
        return Err(Failure::Usage(anyhow!("gen-data needs source = synthetic")));
    };
    manifest.round.validate()?;
    let r = &manifest.round;
    let mut generated = manifest.load_data()?;
    let width = spec.width();

    prepare_out(out)?;
    for (k, stream) in generated.clients.iter_mut().enumerate() {
        let mut all = Vec::with_capacity(r.rounds * r.samples_per_round);
        for _ in 0..r.rounds {
            all.extend(stream.next_batch()?);
        }
        let mut w = create(out, &format!("client_{k}.csv"))?;
        data::write_csv(&mut w, &all, width)?;
        w.flush()?;
    }
    let mut w = create(out, "test.csv")?;
    data::write_csv(&mut w, &generated.test, width)?;
    w.flush()?;

    let replay = Manifest {
        round: r.clone(),
        data: DataSource::Csv { dir: PathBuf::from("."), channels: spec.channels, window: spec.window },
    };
    fs::write(out.join("run.conf"), replay.render()).context("writing run.conf")?;
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}
