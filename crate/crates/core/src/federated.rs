//! Multi-round federated HD training.
//!
//! Round 1: every client encodes its batch and trains from scratch. Round
//! r ≥ 2: every client downloads the global model and retrains it on a fresh
//! batch. In privacy mode each client then adds fresh Gaussian noise whose
//! variance is the ledger's incremental Γ(r) to every class vector before
//! upload. The server only averages; it never adds noise.

use std::io::Write;

use rayon::prelude::*;

use crate::analysis::accuracy_encoded;
use crate::data::{FederatedData, LabeledSample};
use crate::error::{Error, Result};
use crate::hd::{ClassModel, EncoderBasis, Hypervector};
use crate::privacy::{sample_noise, NoiseLedger, NoiseLedgerEntry, PrivacyParams};
use crate::rng::NoiseStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Plain federated HD, no noise.
    FedHd,
    /// Federated HD with incremental client-side Gaussian noise.
    FedHdPrivacy,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FedHd => "fedhd",
            Mode::FedHdPrivacy => "fedhdprivacy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundConfig {
    /// K
    pub clients: usize,
    /// L
    pub samples_per_round: usize,
    /// S
    pub classes: usize,
    /// D
    pub dimensions: usize,
    /// R
    pub rounds: usize,
    /// Absent means no noise.
    pub epsilon: Option<f64>,
    pub basis_seed: u64,
    pub noise_seed: u64,
    pub retrain_epochs: usize,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig {
            clients: 8,
            samples_per_round: 500,
            classes: 3,
            dimensions: 10_000,
            rounds: 10,
            epsilon: None,
            basis_seed: 1,
            noise_seed: 2,
            retrain_epochs: 1,
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clients < 2 {
            return Err(Error::invalid(format!("need K >= 2 clients, got {}", self.clients)));
        }
        if self.samples_per_round < 2 {
            return Err(Error::invalid(format!(
                "need L >= 2 samples per round, got {}",
                self.samples_per_round
            )));
        }
        if self.classes < 2 {
            return Err(Error::invalid(format!("need S >= 2 classes, got {}", self.classes)));
        }
        if self.dimensions == 0 || self.rounds == 0 || self.retrain_epochs == 0 {
            return Err(Error::invalid("D, R and retrain_epochs must be positive"));
        }
        if self.clients > u32::MAX as usize || self.rounds > 0x00ff_ffff {
            return Err(Error::invalid("too many clients or rounds for distinct noise streams"));
        }
        self.privacy().map(|_| ())
    }

    pub fn mode(&self) -> Mode {
        if self.epsilon.is_some() {
            Mode::FedHdPrivacy
        } else {
            Mode::FedHd
        }
    }

    pub fn privacy(&self) -> Result<Option<PrivacyParams>> {
        self.epsilon
            .map(|eps| {
                PrivacyParams::new(
                    eps,
                    self.dimensions as u64,
                    self.clients as u64,
                    self.samples_per_round as u64,
                )
            })
            .transpose()
    }
}

/// Split a batch into encoded hypervectors and labels.
fn encode_batch(basis: &EncoderBasis, batch: &[LabeledSample]) -> Result<(Vec<Hypervector>, Vec<usize>)> {
    let features: Vec<&[f64]> = batch.iter().map(|s| s.features.as_slice()).collect();
    let hvs = basis.encode_batch(&features)?;
    Ok((hvs, batch.iter().map(|s| s.label).collect()))
}

fn check_batch(config: &RoundConfig, client: usize, batch: &[LabeledSample]) -> Result<()> {
    if batch.len() != config.samples_per_round {
        return Err(Error::DataContract(format!(
            "client {client} supplied {} samples, expected L = {}",
            batch.len(),
            config.samples_per_round
        )));
    }
    Ok(())
}

/// Every client encodes its L samples and trains a model from scratch.
pub fn first_round(
    config: &RoundConfig,
    basis: &EncoderBasis,
    client_datasets: &[Vec<LabeledSample>],
) -> Result<Vec<ClassModel>> {
    client_datasets
        .par_iter()
        .enumerate()
        .map(|(k, batch)| {
            check_batch(config, k, batch)?;
            let (hvs, labels) = encode_batch(basis, batch)?;
            ClassModel::train(&hvs, &labels, config.classes)
        })
        .collect()
}

/// Retrains the downloaded global model on a client's fresh batch.
pub fn local_update(
    config: &RoundConfig,
    basis: &EncoderBasis,
    global_model: &ClassModel,
    client_dataset: &[LabeledSample],
    round: usize,
) -> Result<ClassModel> {
    if round < 2 {
        return Err(Error::invalid("local updates start in round 2"));
    }
    if global_model.dimensions() != basis.dimensions() {
        return Err(Error::dimension(
            "global model",
            basis.dimensions(),
            global_model.dimensions(),
        ));
    }
    let (hvs, labels) = encode_batch(basis, client_dataset)?;
    let mut model = global_model.clone();
    for _ in 0..config.retrain_epochs {
        model.retrain_in_place(&hvs, &labels)?;
    }
    Ok(model)
}

/// Adds an independent N(0, incremental_var) vector to every class.
pub fn secure_client(
    model: &ClassModel,
    incremental_var: f64,
    noise: &mut NoiseStream,
) -> Result<ClassModel> {
    let mut out = model.clone();
    for s in 0..model.classes() {
        let n = sample_noise(incremental_var, model.dimensions(), noise)?;
        out.class_vector_mut(s)
            .iter_mut()
            .zip(n)
            .for_each(|(v, e)| *v += e);
    }
    out.set_noised(true);
    Ok(out)
}

/// Element-wise mean of the class vectors; sample counts are summed.
pub fn aggregate(local_models: &[ClassModel]) -> Result<ClassModel> {
    let first = local_models
        .first()
        .ok_or_else(|| Error::invalid("cannot aggregate zero models"))?;
    let (classes, dims) = (first.classes(), first.dimensions());
    let mut out = ClassModel::zeros(classes, dims)?;
    let mut counts = vec![0u64; classes];
    for m in local_models {
        if m.classes() != classes {
            return Err(Error::dimension("aggregate classes", classes, m.classes()));
        }
        if m.dimensions() != dims {
            return Err(Error::dimension("aggregate dimensions", dims, m.dimensions()));
        }
        for s in 0..classes {
            out.class_vector_mut(s)
                .iter_mut()
                .zip(m.class_vector(s))
                .for_each(|(acc, v)| *acc += v);
            counts[s] = counts[s].saturating_add(m.sample_counts()[s]);
        }
    }
    let k = local_models.len() as f64;
    for s in 0..classes {
        out.class_vector_mut(s).iter_mut().for_each(|v| *v /= k);
    }
    out.set_sample_counts(counts);
    out.set_noised(local_models.iter().any(ClassModel::is_noised));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub mode: Mode,
    pub epsilon: Option<f64>,
    pub test_accuracy: f64,
    pub noise: Option<NoiseLedgerEntry>,
    /// Distinct training samples absorbed so far, K·L·r.
    pub samples_consumed: u64,
}

#[derive(Debug, Clone)]
pub struct ClientState {
    pub client_id: u32,
    pub local_model: Option<ClassModel>,
    noise_seed: u64,
}

impl ClientState {
    pub fn noise_stream(&self, round: usize) -> NoiseStream {
        NoiseStream::for_client_round(self.noise_seed, self.client_id, round as u32)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServerState {
    pub global_model: Option<ClassModel>,
    pub round: usize,
    pub history: Vec<RoundMetrics>,
    pub samples_consumed: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub global_model: ClassModel,
    pub ledger: NoiseLedger,
    pub metrics: Vec<RoundMetrics>,
}

/// Orchestrator state across rounds.
pub struct Federation {
    config: RoundConfig,
    basis: EncoderBasis,
    privacy: Option<PrivacyParams>,
    clients: Vec<ClientState>,
    server: ServerState,
    ledger: NoiseLedger,
    test_hvs: Vec<Hypervector>,
    test_labels: Vec<usize>,
}

impl Federation {
    /// One basis, derived from `basis_seed`, is shared by every client.
    pub fn new(config: RoundConfig, input_width: usize, test: &[LabeledSample]) -> Result<Self> {
        config.validate()?;
        let basis = EncoderBasis::new(config.dimensions, input_width, config.basis_seed)?;
        let (test_hvs, test_labels) = encode_batch(&basis, test)?;
        let clients = (0..config.clients)
            .map(|k| ClientState {
                client_id: k as u32,
                local_model: None,
                noise_seed: config.noise_seed,
            })
            .collect();
        Ok(Federation {
            privacy: config.privacy()?,
            config,
            basis,
            clients,
            server: ServerState::default(),
            ledger: NoiseLedger::new(),
            test_hvs,
            test_labels,
        })
    }

    pub fn basis(&self) -> &EncoderBasis {
        &self.basis
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn clients(&self) -> &[ClientState] {
        &self.clients
    }

    pub fn ledger(&self) -> &NoiseLedger {
        &self.ledger
    }

    /// Runs one round on one fresh batch per client.
    pub fn step(&mut self, batches: &[Vec<LabeledSample>]) -> Result<&RoundMetrics> {
        if batches.len() != self.config.clients {
            return Err(Error::DataContract(format!(
                "expected batches for {} clients, got {}",
                self.config.clients,
                batches.len()
            )));
        }
        if self.server.round >= self.config.rounds {
            return Err(Error::invalid("all configured rounds have run"));
        }
        let round = self.server.round + 1;
        let noise = self
            .privacy
            .map(|p| p.ledger_entry(round as u64))
            .transpose()?;

        let clean = match &self.server.global_model {
            None => first_round(&self.config, &self.basis, batches)?,
            Some(global) => batches
                .par_iter()
                .enumerate()
                .map(|(k, batch)| {
                    check_batch(&self.config, k, batch)?;
                    local_update(&self.config, &self.basis, global, batch, round)
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let uploaded = match noise {
            None => clean.clone(),
            Some(entry) => clean
                .par_iter()
                .zip(&self.clients)
                .map(|(m, c)| secure_client(m, entry.incremental_var, &mut c.noise_stream(round)))
                .collect::<Result<Vec<_>>>()?,
        };
        let global = aggregate(&uploaded)?;
        let test_accuracy = accuracy_encoded(&global, &self.test_hvs, &self.test_labels)?;

        for (client, model) in self.clients.iter_mut().zip(uploaded) {
            client.local_model = Some(model);
        }
        if let Some(entry) = noise {
            self.ledger.push(entry);
        }
        self.server.samples_consumed += (self.config.clients * self.config.samples_per_round) as u64;
        self.server.global_model = Some(global);
        self.server.round = round;
        self.server.history.push(RoundMetrics {
            round,
            mode: self.config.mode(),
            epsilon: self.config.epsilon,
            test_accuracy,
            noise,
            samples_consumed: self.server.samples_consumed,
        });
        Ok(self.server.history.last().expect("just pushed"))
    }

    pub fn finish(self) -> Result<RunOutput> {
        let global_model = self
            .server
            .global_model
            .ok_or_else(|| Error::invalid("no round has run"))?;
        Ok(RunOutput {
            global_model,
            ledger: self.ledger,
            metrics: self.server.history,
        })
    }
}

/// Runs all R rounds, pulling L fresh samples per client per round.
pub fn run(config: &RoundConfig, data: &mut FederatedData) -> Result<RunOutput> {
    config.validate()?;
    if data.clients.len() != config.clients {
        return Err(Error::DataContract(format!(
            "config has {} clients but the data source has {}",
            config.clients,
            data.clients.len()
        )));
    }
    let mut federation: Option<Federation> = None;
    for _ in 0..config.rounds {
        let batches = data
            .clients
            .iter_mut()
            .map(|c| c.next_batch())
            .collect::<Result<Vec<_>>>()?;
        let fed = match &mut federation {
            Some(f) => f,
            None => {
                let width = batches
                    .iter()
                    .flatten()
                    .next()
                    .map(|s| s.features.len())
                    .ok_or_else(|| Error::DataContract("first round has no samples".into()))?;
                federation.insert(Federation::new(config.clone(), width, &data.test)?)
            }
        };
        fed.step(&batches)?;
    }
    federation.expect("R >= 1").finish()
}

/// Per-round metrics as CSV. Without epsilon, the required variance and
/// gamma are undefined and left empty, and the added variances are 0.
pub fn write_metrics_csv<W: Write>(metrics: &[RoundMetrics], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "round",
        "mode",
        "epsilon",
        "test_accuracy",
        "required_var",
        "cumulative_var",
        "incremental_var",
        "gamma",
    ])
    .map_err(Error::from_csv)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for m in metrics {
        out.write_record([
            m.round.to_string(),
            m.mode.as_str().to_string(),
            opt(m.epsilon),
            m.test_accuracy.to_string(),
            opt(m.noise.map(|e| e.required_var)),
            m.noise.map_or(0.0, |e| e.cumulative_var).to_string(),
            m.noise.map_or(0.0, |e| e.incremental_var).to_string(),
            opt(m.noise.map(|e| e.gamma)),
        ])
        .map_err(Error::from_csv)?;
    }
    out.flush()?;
    Ok(())
}
