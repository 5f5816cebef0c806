//! Hyperdimensional classifier: random-feature encoding into bipolar
//! hypervectors, bundling into class prototypes, cosine inference, and
//! mistake-driven retraining.

mod decoder;
mod encoder;
mod model;

pub use decoder::{decode, Decoder, ReconstructedSample};
pub use encoder::{EncoderBasis, Hypervector};
pub use model::{ClassModel, Prediction};
