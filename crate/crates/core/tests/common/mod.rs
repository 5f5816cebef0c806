//! Independent small-instance oracles shared by the integration tests and
//! the acceptance suite. They use integer arithmetic wherever the library
//! uses floats, so agreement is not an accident of shared rounding.

#![allow(dead_code)]

use std::cmp::Ordering;

use fedhd_core::{ClassModel, Hypervector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_hv(rng: &mut ChaCha8Rng, d: usize) -> Hypervector {
    Hypervector::from_components((0..d).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
        .unwrap()
}

pub fn random_case(rng: &mut ChaCha8Rng) -> (usize, usize, Vec<Hypervector>, Vec<usize>) {
    let d = rng.random_range(1..=64);
    let s = rng.random_range(2..=5);
    let n = rng.random_range(1..=40);
    let hvs = (0..n).map(|_| random_hv(rng, d)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..s)).collect();
    (d, s, hvs, labels)
}

/// Per-class column sums in i64.
pub fn train_oracle(hvs: &[Hypervector], labels: &[usize], s: usize, d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0i64; d]; s];
    for (h, &y) in hvs.iter().zip(labels) {
        for (j, &c) in h.components().iter().enumerate() {
            out[y][j] += i64::from(c);
        }
    }
    out
}

/// Exact cosine comparison for integer class vectors: compares
/// dot_a/|a| with dot_b/|b| through signed squares in i128.
fn cmp_cos(dot_a: i64, norm_sq_a: i64, dot_b: i64, norm_sq_b: i64) -> Ordering {
    let key = |dot: i64, nsq: i64, other_nsq: i64| -> i128 {
        if nsq == 0 {
            return 0;
        }
        let sq = i128::from(dot) * i128::from(dot) * i128::from(other_nsq);
        if dot < 0 {
            -sq
        } else {
            sq
        }
    };
    // Zero-norm classes score exactly 0.
    match (norm_sq_a == 0, norm_sq_b == 0) {
        (true, true) => Ordering::Equal,
        (true, false) => 0.cmp(&dot_b.signum()),
        (false, true) => dot_a.signum().cmp(&0),
        (false, false) => key(dot_a, norm_sq_a, norm_sq_b).cmp(&key(dot_b, norm_sq_b, norm_sq_a)),
    }
}

/// Argmax of cosine similarity over integer classes, ties to lowest index.
pub fn infer_oracle(classes: &[Vec<i64>], h: &Hypervector) -> usize {
    let stats: Vec<(i64, i64)> = classes
        .iter()
        .map(|c| {
            let dot = c.iter().zip(h.components()).map(|(&v, &q)| v * i64::from(q)).sum();
            let nsq = c.iter().map(|v| v * v).sum();
            (dot, nsq)
        })
        .collect();
    let mut best = 0;
    for i in 1..stats.len() {
        if cmp_cos(stats[i].0, stats[i].1, stats[best].0, stats[best].1) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Scripted sequential replay of mistake-driven retraining.
pub fn retrain_oracle(start: &[Vec<i64>], hvs: &[Hypervector], labels: &[usize]) -> Vec<Vec<i64>> {
    let mut m = start.to_vec();
    for (h, &y) in hvs.iter().zip(labels) {
        let p = infer_oracle(&m, h);
        if p != y {
            for (j, &c) in h.components().iter().enumerate() {
                m[y][j] += i64::from(c);
                m[p][j] -= i64::from(c);
            }
        }
    }
    m
}

/// Per-component mean, accumulated per component independently.
pub fn mean_oracle(models: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let (s, d) = (models[0].len(), models[0][0].len());
    (0..s)
        .map(|c| {
            (0..d)
                .map(|j| models.iter().map(|m| m[c][j]).sum::<f64>() / models.len() as f64)
                .collect()
        })
        .collect()
}

pub fn as_int(model: &ClassModel) -> Vec<Vec<i64>> {
    (0..model.classes())
        .map(|s| {
            model
                .class_vector(s)
                .iter()
                .map(|&v| {
                    assert_eq!(v.fract(), 0.0, "non-integer component {v}");
                    v as i64
                })
                .collect()
        })
        .collect()
}

pub fn from_int(classes: &[Vec<i64>]) -> ClassModel {
    let n = classes.len();
    ClassModel::from_parts(
        classes.iter().map(|c| c.iter().map(|&v| v as f64).collect()).collect(),
        vec![0; n],
        false,
    )
    .unwrap()
}

/// Each check returns None on agreement, or a description of the mismatch.
pub fn check_train(rng: &mut ChaCha8Rng) -> Option<String> {
    let (d, s, hvs, labels) = random_case(rng);
    let model = ClassModel::train(&hvs, &labels, s).unwrap();
    let expected = train_oracle(&hvs, &labels, s, d);
    (as_int(&model) != expected).then(|| format!("train mismatch at D={d}, S={s}"))
}

pub fn check_infer(rng: &mut ChaCha8Rng) -> Option<String> {
    let (d, s, hvs, labels) = random_case(rng);
    let classes = train_oracle(&hvs, &labels, s, d);
    let model = from_int(&classes);
    for _ in 0..20 {
        let q = random_hv(rng, d);
        let (got, want) = (model.infer(&q).unwrap().class, infer_oracle(&classes, &q));
        if got != want {
            return Some(format!("infer picked {got}, oracle {want} at D={d}, S={s}"));
        }
    }
    None
}

pub fn check_retrain(rng: &mut ChaCha8Rng) -> Option<String> {
    let (d, s, hvs, labels) = random_case(rng);
    let start = train_oracle(&hvs, &labels, s, d);
    let more: Vec<Hypervector> = (0..30).map(|_| random_hv(rng, d)).collect();
    let more_labels: Vec<usize> = (0..30).map(|_| rng.random_range(0..s)).collect();
    let got = from_int(&start).retrain(&more, &more_labels).unwrap();
    let want = retrain_oracle(&start, &more, &more_labels);
    (as_int(&got) != want).then(|| format!("retrain mismatch at D={d}, S={s}"))
}

pub fn check_aggregate(rng: &mut ChaCha8Rng) -> Option<String> {
    let d = rng.random_range(1..=64);
    let s = rng.random_range(2..=5);
    let k = rng.random_range(2..=10);
    let raw: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|_| (0..s).map(|_| (0..d).map(|_| rng.random_range(-50.0..50.0)).collect()).collect())
        .collect();
    let models: Vec<ClassModel> = raw
        .iter()
        .map(|m| ClassModel::from_parts(m.clone(), vec![1; s], false).unwrap())
        .collect();
    let got = fedhd_core::federated::aggregate(&models).unwrap();
    let want = mean_oracle(&raw);
    for c in 0..s {
        for (a, b) in got.class_vector(c).iter().zip(&want[c]) {
            if (a - b).abs() > 1e-12 * b.abs().max(1.0) {
                return Some(format!("aggregate {a} vs oracle {b} at K={k}, S={s}, D={d}"));
            }
        }
    }
    (got.sample_counts() != vec![k as u64; s].as_slice()).then(|| "sample counts not summed".to_string())
}
