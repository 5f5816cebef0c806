//! Federated hyperdimensional classification with incremental differential
//! privacy noise.

pub mod analysis;
pub mod data;
pub mod error;
pub mod federated;
pub mod hd;
pub mod manifest;
pub mod privacy;
mod rng;
pub mod snapshot;

pub use error::{Error, Result};
pub use hd::{ClassModel, EncoderBasis, Hypervector};
pub use privacy::{NoiseLedger, NoiseLedgerEntry, PrivacyParams};
pub use rng::NoiseStream;
