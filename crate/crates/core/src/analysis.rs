//! Accuracy, similarity-versus-distance reports, and reconstruction PSNR.

use rayon::prelude::*;

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::hd::{ClassModel, Decoder, EncoderBasis, Hypervector, ReconstructedSample};
use crate::privacy::{sample_noise, PrivacyParams};
use crate::rng::NoiseStream;

/// Fraction of `test` whose predicted class equals its label.
pub fn accuracy(model: &ClassModel, test: &[LabeledSample], basis: &EncoderBasis) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("accuracy of an empty test set"));
    }
    let features: Vec<&[f64]> = test.iter().map(|s| s.features.as_slice()).collect();
    let hvs = basis.encode_batch(&features)?;
    let labels: Vec<usize> = test.iter().map(|s| s.label).collect();
    accuracy_encoded(model, &hvs, &labels)
}

/// Same as [`accuracy`] on already encoded queries.
pub fn accuracy_encoded(model: &ClassModel, queries: &[Hypervector], labels: &[usize]) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::invalid("accuracy of an empty test set"));
    }
    if queries.len() != labels.len() {
        return Err(Error::dimension("labels", queries.len(), labels.len()));
    }
    let mut correct = 0usize;
    for (h, &y) in queries.iter().zip(labels) {
        if model.infer(h)?.class == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / queries.len() as f64)
}

/// Normalized histogram over equal-width bins on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    /// Bin masses; they sum to 1.
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn from_values(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if values.is_empty() || bins == 0 {
            return Err(Error::invalid("histogram needs values and at least one bin"));
        }
        if !(hi > lo) {
            return Err(Error::invalid(format!("empty histogram range [{lo}, {hi}]")));
        }
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &v in values {
            let i = ((v - lo) / width).floor();
            let i = if i.is_nan() { 0 } else { (i.max(0.0) as usize).min(bins - 1) };
            counts[i] += 1;
        }
        let n = values.len() as f64;
        Ok(Histogram {
            lo,
            hi,
            mass: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }

    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.mass.len() as f64;
        (self.lo + w * bin as f64, self.lo + w * (bin + 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub distance: f64,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairHistogram {
    pub first: usize,
    pub second: usize,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    /// One cloud per client, n(n−1)/2 points each.
    pub clouds: Vec<Vec<CloudPoint>>,
    /// Cross-client hypervector cosine similarities, for every pair i < j.
    pub similarity: Vec<PairHistogram>,
    /// Cross-client raw Euclidean distances, for every pair i < j.
    pub distance: Vec<PairHistogram>,
}

pub const DEFAULT_BINS: usize = 40;

/// Raw distances against hypervector similarities, within and across clients.
pub fn similarity_distance(
    clients: &[Vec<Vec<f64>>],
    basis: &EncoderBasis,
    bins: usize,
) -> Result<SimilarityReport> {
    if clients.len() < 2 {
        return Err(Error::invalid("similarity report needs at least 2 clients"));
    }
    if let Some(k) = clients.iter().position(|c| c.len() < 2) {
        return Err(Error::invalid(format!("client {k} has fewer than 2 samples")));
    }
    let encoded = clients
        .iter()
        .map(|c| basis.encode_batch(c))
        .collect::<Result<Vec<_>>>()?;

    let clouds = clients
        .par_iter()
        .zip(&encoded)
        .map(|(xs, hs)| {
            let mut cloud = Vec::with_capacity(xs.len() * (xs.len() - 1) / 2);
            for i in 0..xs.len() {
                for j in i + 1..xs.len() {
                    cloud.push(CloudPoint {
                        distance: euclidean(&xs[i], &xs[j]),
                        similarity: hs[i].cosine(&hs[j]),
                    });
                }
            }
            cloud
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..clients.len())
        .flat_map(|i| (i + 1..clients.len()).map(move |j| (i, j)))
        .collect();
    let cross: Vec<(Vec<f64>, Vec<f64>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let n = clients[i].len() * clients[j].len();
            let (mut sims, mut dists) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for (x, h) in clients[i].iter().zip(&encoded[i]) {
                for (y, g) in clients[j].iter().zip(&encoded[j]) {
                    sims.push(h.cosine(g));
                    dists.push(euclidean(x, y));
                }
            }
            (sims, dists)
        })
        .collect();
    let max_distance = cross
        .iter()
        .flat_map(|(_, d)| d.iter().copied())
        .fold(0.0f64, f64::max);
    let distance_hi = if max_distance > 0.0 { max_distance } else { 1.0 };

    let mut similarity = Vec::with_capacity(pairs.len());
    let mut distance = Vec::with_capacity(pairs.len());
    for (&(first, second), (sims, dists)) in pairs.iter().zip(&cross) {
        similarity.push(PairHistogram {
            first,
            second,
            histogram: Histogram::from_values(sims, -1.0, 1.0, bins)?,
        });
        distance.push(PairHistogram {
            first,
            second,
            histogram: Histogram::from_values(dists, 0.0, distance_hi, bins)?,
        });
    }
    Ok(SimilarityReport { clouds, similarity, distance })
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Spearman rank correlation, average ranks for ties. NaN if either side is
/// constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dimension("spearman", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::invalid("spearman needs at least 2 points"));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    Ok(pearson(&ra, &rb))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let rank = (start + end - 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

/// Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Peak signal-to-noise ratio in dB, peak = max |reference|. Identical
/// inputs give +∞.
pub fn psnr(reference: &[f64], candidate: &[f64]) -> Result<f64> {
    if reference.len() != candidate.len() {
        return Err(Error::dimension("psnr candidate", reference.len(), candidate.len()));
    }
    let peak = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) {
        return Err(Error::invalid("psnr reference is constant zero"));
    }
    let mse = reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| (r - c) * (r - c))
        .sum::<f64>()
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsnrStudy {
    pub noise_levels: Vec<f64>,
    /// Mean PSNR over the signals at each level.
    pub psnr_db: Vec<f64>,
    /// Mean peak amplitude of the reference signals.
    pub reference_peak: f64,
}

impl PsnrStudy {
    pub fn strictly_decreasing(&self) -> bool {
        self.psnr_db.windows(2).all(|w| w[1] < w[0])
    }

    pub fn first_is_best(&self) -> bool {
        self.psnr_db.iter().all(|&p| p <= self.psnr_db[0])
    }
}

/// Encode, perturb the bipolar hypervector with N(0, var) per component,
/// decode, and average PSNR over `signals`, for every variance.
pub fn reconstruction_study(
    basis: &EncoderBasis,
    signals: &[Vec<f64>],
    noise_variances: &[f64],
    seed: u64,
) -> Result<PsnrStudy> {
    if signals.is_empty() {
        return Err(Error::invalid("reconstruction study needs signals"));
    }
    match noise_variances.first() {
        Some(0.0) => {}
        _ => return Err(Error::invalid("noise variances must start at 0")),
    }
    if noise_variances.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("noise variances must be strictly ascending"));
    }
    let decoder = Decoder::new(basis)?;
    let mut psnr_db = Vec::with_capacity(noise_variances.len());
    for (level, &var) in noise_variances.iter().enumerate() {
        let scores = signals
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut noise = study_stream(seed, level, i);
                let r = reconstruct(basis, &decoder, x, var, &mut noise)?;
                Ok(r.psnr_db.expect("set by reconstruct"))
            })
            .collect::<Result<Vec<f64>>>()?;
        psnr_db.push(scores.iter().sum::<f64>() / scores.len() as f64);
    }
    let reference_peak = signals
        .iter()
        .map(|x| x.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .sum::<f64>()
        / signals.len() as f64;
    Ok(PsnrStudy {
        noise_levels: noise_variances.to_vec(),
        psnr_db,
        reference_peak,
    })
}

/// Noise stream used by [`reconstruction_study`] for one (level, signal).
pub fn study_stream(seed: u64, level: usize, signal: usize) -> NoiseStream {
    NoiseStream::from_seed(seed ^ ((level as u64) << 32 | signal as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Encode `x`, add N(0, var) to every bipolar component, decode, and score
/// against `x`.
pub fn reconstruct(
    basis: &EncoderBasis,
    decoder: &Decoder<'_>,
    x: &[f64],
    var: f64,
    noise: &mut NoiseStream,
) -> Result<ReconstructedSample> {
    let mut y = basis.encode(x)?.to_f64();
    sample_noise(var, y.len(), noise)?
        .into_iter()
        .zip(&mut y)
        .for_each(|(e, v)| *v += e);
    let values = decoder.decode(&y)?;
    let psnr_db = Some(psnr(x, &values)?);
    Ok(ReconstructedSample { values, psnr_db })
}

/// One row of a noise-curve table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCurveRow {
    pub round: u64,
    pub client_required: f64,
    pub client_cumulative: f64,
    pub client_incremental: f64,
    pub server_required: f64,
    pub server_cumulative: f64,
    pub gamma: f64,
}

/// Client and server noise levels for rounds 1..=rounds.
pub fn noise_curve(params: &PrivacyParams, rounds: u64) -> Result<Vec<NoiseCurveRow>> {
    (1..=rounds)
        .map(|r| {
            Ok(NoiseCurveRow {
                round: r,
                client_required: params.client_required_var(r)?,
                client_cumulative: params.client_cumulative_var(r - 1)?,
                client_incremental: params.client_incremental_var(r)?,
                server_required: params.server_required_var(r)?,
                server_cumulative: params.server_cumulative_var(r)?,
                gamma: params.gamma(r)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn psnr_hand_values() {
        let r = [1.0, -0.5, 0.25];
        assert_eq!(psnr(&r, &r).unwrap(), f64::INFINITY);
        let c: Vec<f64> = r.iter().map(|v| v + 0.1).collect();
        assert_relative_eq!(psnr(&r, &c).unwrap(), 20.0, epsilon = 1e-9);
        let d: Vec<f64> = r.iter().map(|v| v + 0.2).collect();
        assert_relative_eq!(
            psnr(&r, &c).unwrap() - psnr(&r, &d).unwrap(),
            20.0 * 2f64.log10(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn psnr_errors() {
        assert!(matches!(psnr(&[1.0], &[1.0, 2.0]), Err(Error::Dimension { .. })));
        assert!(matches!(psnr(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::InvalidArgument(_))));
    }

    proptest! {
        #[test]
        fn psnr_translation_closed_form(
            r in prop::collection::vec(-5.0f64..5.0, 1..20),
            c in 1e-3f64..3.0,
            sign in any::<bool>(),
        ) {
            let peak = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assume!(peak > 1e-6);
            let shift = if sign { c } else { -c };
            let cand: Vec<f64> = r.iter().map(|v| v + shift).collect();
            let expected = 10.0 * (peak * peak / (c * c)).log10();
            prop_assert!((psnr(&r, &cand).unwrap() - expected).abs() < 1e-6);
        }

        #[test]
        fn histogram_mass_is_one(
            v in prop::collection::vec(-2.0f64..2.0, 1..200),
            bins in 1usize..50,
        ) {
            let h = Histogram::from_values(&v, -1.0, 1.0, bins).unwrap();
            prop_assert!((h.mass.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_sample_accuracy() {
        let basis = EncoderBasis::new(64, 3, 5).unwrap();
        let x = LabeledSample { features: vec![0.1, 0.2, 0.3], label: 1 };
        let h = basis.encode(&x.features).unwrap();
        let model = ClassModel::train(&[h], &[1], 2).unwrap();
        assert_eq!(accuracy(&model, &[x], &basis).unwrap(), 1.0);
        assert!(accuracy(&model, &[], &basis).is_err());
    }

    #[test]
    fn duplicate_pair_in_cloud() {
        let basis = EncoderBasis::new(128, 2, 3).unwrap();
        let a = vec![vec![0.3, 0.4], vec![0.3, 0.4]];
        let b = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        let report = similarity_distance(&[a, b], &basis, 10).unwrap();
        assert_eq!(report.clouds[0], vec![CloudPoint { distance: 0.0, similarity: 1.0 }]);
        assert_eq!(report.clouds[1].len(), 3);
        assert_eq!(report.similarity.len(), 1);
        assert_eq!(report.distance.len(), 1);
    }

    #[test]
    fn similarity_preconditions() {
        let basis = EncoderBasis::new(16, 1, 3).unwrap();
        let one = vec![vec![0.0], vec![1.0]];
        assert!(similarity_distance(&[one.clone()], &basis, 4).is_err());
        assert!(similarity_distance(&[one, vec![vec![0.0]]], &basis, 4).is_err());
    }

    #[test]
    fn spearman_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(spearman(&a, &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0);
        assert_relative_eq!(spearman(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![1.5, 0.0, 1.5]);
    }

    #[test]
    fn noise_curve_rows_are_consistent() {
        let p = PrivacyParams::new(1.0, 100, 5, 500).unwrap();
        let rows = noise_curve(&p, 50).unwrap();
        assert_eq!(rows.len(), 50);
        assert_eq!(rows[0].client_cumulative, 0.0);
        for r in &rows {
            assert_relative_eq!(r.client_cumulative + r.client_incremental, r.client_required, max_relative = 1e-12);
            assert!(r.gamma > 1.0);
        }
        assert_relative_eq!(rows[49].client_incremental / rows[49].client_required, 0.800343874, epsilon = 1e-8);
    }

    #[test]
    fn study_rejects_bad_ladders() {
        let basis = EncoderBasis::new(16, 2, 3).unwrap();
        let s = vec![vec![1.0, 0.5]];
        assert!(reconstruction_study(&basis, &s, &[0.1, 0.2], 1).is_err());
        assert!(reconstruction_study(&basis, &s, &[0.0, 0.2, 0.2], 1).is_err());
        assert!(reconstruction_study(&basis, &[], &[0.0], 1).is_err());
    }
}
