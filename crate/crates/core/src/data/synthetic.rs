//! Synthetic stand-in for multi-channel machining signals.
//!
//! Every class has a smooth template: a shared base pattern plus a
//! class-specific direction. Directions are orthonormalized and scaled so
//! that any two class templates sit exactly `class_separation` apart. Each
//! client adds its own smooth offset of norm `client_shift`, and every
//! sample adds i.i.d. N(0, noise_std²) per feature.

use std::f64::consts::{SQRT_2, TAU};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, DOMAIN_DATA};

use super::{ClientStream, FederatedData, LabeledSample};

const TEMPLATE_STREAM: u64 = 1 << 40;
const TEST_STREAM: u64 = TEMPLATE_STREAM + 1;
const SIGNAL_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub channels: usize,
    pub window: usize,
    pub classes: usize,
    pub client_shift: f64,
    pub class_separation: f64,
    pub noise_std: f64,
    /// Norm of the pattern shared by all classes.
    pub base_norm: f64,
    /// Held-out share of all generated samples.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            channels: 90,
            window: 10,
            classes: 3,
            client_shift: 0.5,
            class_separation: 1.0,
            noise_std: 0.05,
            base_norm: 1.0,
            test_fraction: 0.2,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn width(&self) -> usize {
        self.channels * self.window
    }

    fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.window == 0 {
            return Err(Error::invalid("channels and window must be positive"));
        }
        if self.classes < 2 {
            return Err(Error::invalid("need at least 2 classes"));
        }
        if self.classes > self.width() {
            return Err(Error::invalid("more classes than feature dimensions"));
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::invalid("class_separation must be positive"));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be positive"));
        }
        if !(self.client_shift >= 0.0 && self.client_shift.is_finite()) {
            return Err(Error::invalid("client_shift must be non-negative"));
        }
        if !(self.base_norm >= 0.0 && self.base_norm.is_finite()) {
            return Err(Error::invalid("base_norm must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::invalid("test_fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Class template means, before any client offset.
    pub fn class_templates(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut rng = rng::stream(self.seed, DOMAIN_DATA, TEMPLATE_STREAM);
        let base = scaled(smooth_pattern(&mut rng, self.channels, self.window), self.base_norm);
        let mut directions: Vec<Vec<f64>> = Vec::with_capacity(self.classes);
        while directions.len() < self.classes {
            let mut v = smooth_pattern(&mut rng, self.channels, self.window);
            for u in &directions {
                let proj = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
            }
            // Redraw the rare near-dependent pattern.
            if norm(&v) > 1e-6 {
                directions.push(scaled(v, 1.0));
            }
        }
        let step = self.class_separation / SQRT_2;
        Ok(directions
            .into_iter()
            .map(|d| base.iter().zip(&d).map(|(b, u)| b + step * u).collect())
            .collect())
    }

    /// Smooth offset of norm `client_shift` for `client`.
    pub fn client_offset(&self, client: usize) -> Vec<f64> {
        let mut rng = rng::stream(self.seed, DOMAIN_DATA, TEMPLATE_STREAM + 2 + client as u64);
        scaled(smooth_pattern(&mut rng, self.channels, self.window), self.client_shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPlan {
    pub samples_per_round: usize,
    pub rounds: usize,
    /// Exactly L/S samples of every class per batch.
    pub balance: bool,
}

impl BatchPlan {
    fn validate(&self, classes: usize) -> Result<()> {
        if self.samples_per_round == 0 || self.rounds == 0 {
            return Err(Error::invalid("batch size and round count must be positive"));
        }
        if self.balance && !self.samples_per_round.is_multiple_of(classes) {
            return Err(Error::invalid(format!(
                "balanced batches need L divisible by S, got L={} S={classes}",
                self.samples_per_round
            )));
        }
        Ok(())
    }

    /// Batch labels before shuffling: L/S of each class when balanced,
    /// otherwise cycled so counts differ by at most one.
    fn labels(&self, classes: usize) -> Vec<usize> {
        (0..self.samples_per_round).map(|i| i % classes).collect()
    }
}

/// Builds one stream per client and a held-out test set mixing all clients.
pub fn generate(spec: &SyntheticSpec, clients: usize, plan: BatchPlan) -> Result<FederatedData> {
    if clients == 0 {
        return Err(Error::invalid("need at least one client"));
    }
    plan.validate(spec.classes)?;
    let templates = spec.class_templates()?;
    let offsets: Vec<Vec<f64>> = (0..clients).map(|k| spec.client_offset(k)).collect();
    let means_for = |k: usize| -> Vec<Vec<f64>> {
        templates
            .iter()
            .map(|t| t.iter().zip(&offsets[k]).map(|(a, b)| a + b).collect())
            .collect()
    };

    let streams = (0..clients)
        .map(|k| {
            ClientStream::Synthetic(SyntheticStream {
                rng: rng::stream(spec.seed, DOMAIN_DATA, k as u64),
                means: means_for(k),
                noise_std: spec.noise_std,
                plan,
                served: 0,
            })
        })
        .collect();

    let train_total = clients * plan.samples_per_round * plan.rounds;
    let test_len =
        (train_total as f64 * spec.test_fraction / (1.0 - spec.test_fraction)).round() as usize;
    let all_means: Vec<Vec<Vec<f64>>> = (0..clients).map(means_for).collect();
    let mut rng = rng::stream(spec.seed, DOMAIN_DATA, TEST_STREAM);
    let test = (0..test_len)
        .map(|i| {
            let label = i % spec.classes;
            let client = (i / spec.classes) % clients;
            draw(&mut rng, &all_means[client][label], spec.noise_std, label)
        })
        .collect();

    Ok(FederatedData {
        clients: streams,
        test,
    })
}

/// Lazily generated batches for one client.
#[derive(Debug)]
pub struct SyntheticStream {
    rng: ChaCha20Rng,
    means: Vec<Vec<f64>>,
    noise_std: f64,
    plan: BatchPlan,
    served: usize,
}

impl SyntheticStream {
    pub(super) fn next_batch(&mut self) -> Result<Vec<LabeledSample>> {
        if self.served >= self.plan.rounds {
            return Err(Error::DataContract(format!(
                "synthetic stream exhausted after {} rounds",
                self.plan.rounds
            )));
        }
        self.served += 1;
        let mut labels = self.plan.labels(self.means.len());
        labels.shuffle(&mut self.rng);
        Ok(labels
            .into_iter()
            .map(|label| draw(&mut self.rng, &self.means[label], self.noise_std, label))
            .collect())
    }
}

/// `count` independent smooth signals of width `channels·window`, each
/// scaled to Euclidean norm `norm`.
pub fn smooth_signals(
    channels: usize,
    window: usize,
    count: usize,
    norm: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if channels == 0 || window == 0 {
        return Err(Error::invalid("channels and window must be positive"));
    }
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("signal norm must be positive"));
    }
    Ok((0..count as u64)
        .map(|i| {
            let mut rng = rng::stream(seed, DOMAIN_DATA, SIGNAL_STREAM + i);
            scaled(smooth_pattern(&mut rng, channels, window), norm)
        })
        .collect())
}

fn draw(rng: &mut ChaCha20Rng, mean: &[f64], noise_std: f64, label: usize) -> LabeledSample {
    let features = mean
        .iter()
        .map(|&m| {
            let z: f64 = rng.sample(StandardNormal);
            m + noise_std * z
        })
        .collect();
    LabeledSample { features, label }
}

/// Per channel, a sinusoid with 0.5 to 2 cycles per window, random phase,
/// and amplitude in [0.5, 1.5]; flattened channel-major.
fn smooth_pattern(rng: &mut ChaCha20Rng, channels: usize, window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(channels * window);
    for _ in 0..channels {
        let cycles = rng.random_range(0.5..2.0);
        let phase = rng.random_range(0.0..TAU);
        let amplitude = rng.random_range(0.5..1.5);
        out.extend((0..window).map(|t| {
            amplitude * (TAU * cycles * t as f64 / window as f64 + phase).sin()
        }));
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scaled(mut v: Vec<f64>, target: f64) -> Vec<f64> {
    let n = norm(&v);
    let factor = if n > 0.0 { target / n } else { 0.0 };
    v.iter_mut().for_each(|x| *x *= factor);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec {
            channels: 6,
            window: 5,
            ..SyntheticSpec::default()
        }
    }

    fn plan(l: usize, r: usize) -> BatchPlan {
        BatchPlan {
            samples_per_round: l,
            rounds: r,
            balance: true,
        }
    }

    #[test]
    fn templates_are_equidistant() {
        let spec = small_spec();
        let t = spec.class_templates().unwrap();
        for a in 0..3 {
            for b in a + 1..3 {
                let d: f64 = t[a].iter().zip(&t[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                assert!((d - spec.class_separation).abs() < 1e-12, "{d}");
            }
        }
    }

    #[test]
    fn balanced_batches_have_exact_histograms() {
        let mut data = generate(&small_spec(), 2, plan(12, 3)).unwrap();
        for stream in &mut data.clients {
            for _ in 0..3 {
                let batch = stream.next_batch().unwrap();
                let mut hist = [0; 3];
                batch.iter().for_each(|s| hist[s.label] += 1);
                assert_eq!(hist, [4, 4, 4]);
            }
            assert!(matches!(stream.next_batch(), Err(Error::DataContract(_))));
        }
    }

    #[test]
    fn unbalanced_divisibility() {
        assert!(generate(&small_spec(), 2, plan(10, 1)).is_err());
        let loose = BatchPlan {
            balance: false,
            ..plan(10, 1)
        };
        let mut data = generate(&small_spec(), 2, loose).unwrap();
        let batch = data.clients[0].next_batch().unwrap();
        let mut hist = [0; 3];
        batch.iter().for_each(|s| hist[s.label] += 1);
        assert_eq!(hist, [4, 3, 3]);
    }

    #[test]
    fn zero_shift_gives_identical_distributions() {
        let spec = SyntheticSpec {
            client_shift: 0.0,
            ..small_spec()
        };
        assert_eq!(spec.client_offset(0), spec.client_offset(1));
        assert!(spec.client_offset(0).iter().all(|&v| v == 0.0));
        let shifted = small_spec();
        let o = shifted.client_offset(3);
        assert!((norm(&o) - shifted.client_shift).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let mut a = generate(&small_spec(), 3, plan(6, 2)).unwrap();
        let mut b = generate(&small_spec(), 3, plan(6, 2)).unwrap();
        assert_eq!(a.test, b.test);
        for (x, y) in a.clients.iter_mut().zip(b.clients.iter_mut()) {
            assert_eq!(x.next_batch().unwrap(), y.next_batch().unwrap());
        }
    }

    #[test]
    fn test_set_size_and_balance() {
        let data = generate(&small_spec(), 2, plan(6, 5)).unwrap();
        // 60 training samples at a 20% test share → 15 test samples.
        assert_eq!(data.test.len(), 15);
        let mut hist = [0; 3];
        data.test.iter().for_each(|s| hist[s.label] += 1);
        assert_eq!(hist, [5, 5, 5]);
    }

    #[test]
    fn invalid_specs() {
        for bad in [
            SyntheticSpec { class_separation: 0.0, ..small_spec() },
            SyntheticSpec { noise_std: 0.0, ..small_spec() },
            SyntheticSpec { classes: 1, ..small_spec() },
            SyntheticSpec { test_fraction: 1.0, ..small_spec() },
        ] {
            assert!(generate(&bad, 2, plan(6, 1)).is_err(), "{bad:?}");
        }
    }
}
