//! Gaussian-mechanism calibration and the per-round noise ledger.
//!
//! Variances are in squared hypervector-component units. Clients protect
//! everything their model has absorbed so far (sensitivity √D, δ the inverse
//! of the protected sample count); the server sees a K-fold average
//! (sensitivity √D/K). The ledger tracks, per round r:
//!
//! ```text
//! required    ξ(r)   = 2D/ε² · ln(1.25·((r-1)KL + L))
//! cumulative  Ψ(r-1) = 2D/(Kε²) · ln(1.25·((r-2)KL + L)),  Ψ(0) = 0
//! incremental Γ(r)   = ξ(r) - Ψ(r-1)
//! server      ξg(r)  = 2D/(K²ε²) · ln(1.25·KLr)
//!             Ψg(r)  = ξ(r) / K
//! gamma       γ(r)   = Ψg(r) / ξg(r)
//! ```
//!
//! γ > 1 means the averaged client noise already covers the server's
//! requirement, so the server never adds noise of its own.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::NoiseStream;

/// `2·ln(1.25/δ)·Δf²/ε²`, the Gaussian-mechanism variance taken at equality.
pub fn gaussian_variance(sensitivity: f64, epsilon: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::invalid(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    Ok(2.0 * (1.25 / delta).ln() * sensitivity * sensitivity / (epsilon * epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    epsilon: f64,
    dimensions: u64,
    clients: u64,
    samples_per_round: u64,
}

impl PrivacyParams {
    /// Requires ε > 0, D ≥ 1, K ≥ 2 and L ≥ 2; the sufficiency results do not
    /// hold outside that range.
    pub fn new(epsilon: f64, dimensions: u64, clients: u64, samples_per_round: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if dimensions == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        if clients < 2 {
            return Err(Error::invalid(format!("need K >= 2 clients, got {clients}")));
        }
        if samples_per_round < 2 {
            return Err(Error::invalid(format!(
                "need L >= 2 samples per round, got {samples_per_round}"
            )));
        }
        Ok(PrivacyParams {
            epsilon,
            dimensions,
            clients,
            samples_per_round,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dimensions(&self) -> u64 {
        self.dimensions
    }

    pub fn clients(&self) -> u64 {
        self.clients
    }

    pub fn samples_per_round(&self) -> u64 {
        self.samples_per_round
    }

    /// 2D/ε², the per-client scale shared by every client-side variance.
    fn client_scale(&self) -> f64 {
        2.0 * self.dimensions as f64 / (self.epsilon * self.epsilon)
    }

    /// Samples a client model must protect when sending in `round`:
    /// everything in the downloaded global model plus its own fresh batch.
    fn client_protected(&self, round: u64) -> f64 {
        ((round - 1) * self.clients * self.samples_per_round + self.samples_per_round) as f64
    }

    pub fn client_required_var(&self, round: u64) -> Result<f64> {
        check_round(round)?;
        Ok(self.client_scale() * (1.25 * self.client_protected(round)).ln())
    }

    /// Noise already present in the global model a client downloads before
    /// `previous_round + 1`; zero before the first round.
    pub fn client_cumulative_var(&self, previous_round: u64) -> Result<f64> {
        if previous_round == 0 {
            return Ok(0.0);
        }
        Ok(self.client_required_var(previous_round)? / self.clients as f64)
    }

    pub fn client_incremental_var(&self, round: u64) -> Result<f64> {
        Ok(self.client_required_var(round)? - self.client_cumulative_var(round - 1)?)
    }

    /// Incremental variance as a single expression,
    /// `2D/(Kε²)·[K·ln(1.25((r-1)KL+L)) − ln(1.25((r-2)KL+L))]` for r ≥ 2.
    pub fn client_incremental_var_closed_form(&self, round: u64) -> Result<f64> {
        check_round(round)?;
        if round == 1 {
            return self.client_required_var(1);
        }
        let k = self.clients as f64;
        let current = (1.25 * self.client_protected(round)).ln();
        let previous = (1.25 * self.client_protected(round - 1)).ln();
        Ok(self.client_scale() / k * (k * current - previous))
    }

    /// Variance the server would need to protect all K·L·r samples behind
    /// the averaged model.
    pub fn server_required_var(&self, round: u64) -> Result<f64> {
        check_round(round)?;
        let k = self.clients as f64;
        let protected = (self.clients * self.samples_per_round * round) as f64;
        Ok(self.client_scale() / (k * k) * (1.25 * protected).ln())
    }

    /// Noise variance in the global model after averaging round `round`.
    pub fn server_cumulative_var(&self, round: u64) -> Result<f64> {
        check_round(round)?;
        self.client_cumulative_var(round)
    }

    pub fn gamma(&self, round: u64) -> Result<f64> {
        Ok(self.server_cumulative_var(round)? / self.server_required_var(round)?)
    }

    pub fn ledger_entry(&self, round: u64) -> Result<NoiseLedgerEntry> {
        Ok(NoiseLedgerEntry {
            round,
            required_var: self.client_required_var(round)?,
            cumulative_var: self.client_cumulative_var(round - 1)?,
            incremental_var: self.client_incremental_var(round)?,
            gamma: self.gamma(round)?,
        })
    }
}

fn check_round(round: u64) -> Result<()> {
    if round == 0 {
        Err(Error::invalid("rounds are numbered from 1"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLedgerEntry {
    pub round: u64,
    pub required_var: f64,
    pub cumulative_var: f64,
    pub incremental_var: f64,
    pub gamma: f64,
}

/// Per-round noise record for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseLedger {
    entries: Vec<NoiseLedgerEntry>,
}

impl NoiseLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ledger for rounds 1..=rounds.
    pub fn for_rounds(params: &PrivacyParams, rounds: u64) -> Result<Self> {
        let entries = (1..=rounds)
            .map(|r| params.ledger_entry(r))
            .collect::<Result<_>>()?;
        Ok(NoiseLedger { entries })
    }

    pub fn push(&mut self, entry: NoiseLedgerEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[NoiseLedgerEntry] {
        &self.entries
    }

    /// The server's own contribution; always zero because γ > 1 every round.
    pub fn server_added_var(&self) -> f64 {
        0.0
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["round", "required_var", "cumulative_var", "incremental_var", "gamma"])
            .map_err(Error::from_csv)?;
        for e in &self.entries {
            out.write_record([
                e.round.to_string(),
                e.required_var.to_string(),
                e.cumulative_var.to_string(),
                e.incremental_var.to_string(),
                e.gamma.to_string(),
            ])
            .map_err(Error::from_csv)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `dimensions` i.i.d. N(0, variance) draws from the stream's current
/// position. Zero variance yields the zero vector and consumes nothing.
pub fn sample_noise(variance: f64, dimensions: usize, stream: &mut NoiseStream) -> Result<Vec<f64>> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::invalid(format!(
            "noise variance must be finite and non-negative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(vec![0.0; dimensions]);
    }
    let std = variance.sqrt();
    Ok((0..dimensions)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut stream.0);
            std * z
        })
        .collect())
}
