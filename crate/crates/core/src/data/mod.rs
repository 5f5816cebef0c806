//! Labeled multi-channel signal windows: synthesis, CSV ingestion, and
//! per-round batch serving.

mod csv_io;
mod synthetic;
mod window;

pub use csv_io::{ingest_csv, ingest_csv_reader, write_csv, CsvSchema};
pub use synthetic::{generate, smooth_signals, BatchPlan, SyntheticSpec, SyntheticStream};
pub use window::window;

use crate::error::{Error, Result};

/// One flattened window (channel-major) and its class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Process condition derived from a quality z-score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessLabel {
    Under = 0,
    Nominal = 1,
    Over = 2,
}

impl ProcessLabel {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// z < -1 is under, z > 1 is over, and the closed interval [-1, 1] is
/// nominal.
pub fn label_from_zscore(z: f64) -> Result<ProcessLabel> {
    if !z.is_finite() {
        return Err(Error::invalid(format!("z-score must be finite, got {z}")));
    }
    Ok(if z < -1.0 {
        ProcessLabel::Under
    } else if z > 1.0 {
        ProcessLabel::Over
    } else {
        ProcessLabel::Nominal
    })
}

/// Per-client batch source. Each stream serves disjoint consecutive batches
/// of a fixed size.
#[derive(Debug)]
pub enum ClientStream {
    Synthetic(synthetic::SyntheticStream),
    Recorded {
        samples: Vec<LabeledSample>,
        batch: usize,
        cursor: usize,
    },
}

impl ClientStream {
    pub fn recorded(samples: Vec<LabeledSample>, batch: usize) -> Self {
        ClientStream::Recorded {
            samples,
            batch,
            cursor: 0,
        }
    }

    pub fn next_batch(&mut self) -> Result<Vec<LabeledSample>> {
        match self {
            ClientStream::Synthetic(s) => s.next_batch(),
            ClientStream::Recorded {
                samples,
                batch,
                cursor,
            } => {
                let end = *cursor + *batch;
                if end > samples.len() {
                    return Err(Error::DataContract(format!(
                        "client data exhausted: needed {batch} samples, {} left",
                        samples.len() - *cursor
                    )));
                }
                let out = samples[*cursor..end].to_vec();
                *cursor = end;
                Ok(out)
            }
        }
    }
}

/// Training streams for every client plus a held-out test set.
#[derive(Debug)]
pub struct FederatedData {
    pub clients: Vec<ClientStream>,
    pub test: Vec<LabeledSample>,
}

impl FederatedData {
    pub fn recorded(clients: Vec<Vec<LabeledSample>>, test: Vec<LabeledSample>, batch: usize) -> Self {
        FederatedData {
            clients: clients
                .into_iter()
                .map(|s| ClientStream::recorded(s, batch))
                .collect(),
            test,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_boundaries() {
        assert_eq!(label_from_zscore(0.0).unwrap(), ProcessLabel::Nominal);
        assert_eq!(label_from_zscore(-1.0).unwrap(), ProcessLabel::Nominal);
        assert_eq!(label_from_zscore(1.0).unwrap(), ProcessLabel::Nominal);
        assert_eq!(label_from_zscore(-1.0001).unwrap(), ProcessLabel::Under);
        assert_eq!(label_from_zscore(2.5).unwrap(), ProcessLabel::Over);
        assert_eq!(label_from_zscore(2.5).unwrap().index(), 2);
        assert!(label_from_zscore(f64::NAN).is_err());
        assert!(label_from_zscore(f64::INFINITY).is_err());
    }

    #[test]
    fn recorded_stream_exhausts() {
        let s = |label| LabeledSample {
            features: vec![0.0],
            label,
        };
        let mut stream = ClientStream::recorded(vec![s(0), s(1), s(0)], 2);
        assert_eq!(stream.next_batch().unwrap().len(), 2);
        assert!(matches!(stream.next_batch(), Err(Error::DataContract(_))));
    }
}
