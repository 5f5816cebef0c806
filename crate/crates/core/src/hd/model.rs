use crate::error::{Error, Result};

use super::Hypervector;

/// S real-valued class prototypes of dimension D, stored class-major.
///
/// A clean model holds exact sums of bipolar hypervectors. A noised model
/// additionally carries Gaussian perturbations and is flagged as such.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    dimensions: usize,
    vectors: Vec<f64>,
    sample_counts: Vec<u64>,
    noised: bool,
}

/// Outcome of [`ClassModel::infer`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub similarities: Vec<f64>,
}

impl ClassModel {
    pub fn zeros(classes: usize, dimensions: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {classes}")));
        }
        if dimensions == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        Ok(ClassModel {
            dimensions,
            vectors: vec![0.0; classes * dimensions],
            sample_counts: vec![0; classes],
            noised: false,
        })
    }

    /// Assembles a model from class vectors; all must share one dimension.
    pub fn from_parts(
        vectors: Vec<Vec<f64>>,
        sample_counts: Vec<u64>,
        noised: bool,
    ) -> Result<Self> {
        let classes = vectors.len();
        if sample_counts.len() != classes {
            return Err(Error::dimension("sample counts", classes, sample_counts.len()));
        }
        let dimensions = vectors.first().map_or(0, Vec::len);
        let mut model = ClassModel::zeros(classes, dimensions)?;
        for (s, v) in vectors.iter().enumerate() {
            if v.len() != dimensions {
                return Err(Error::dimension("class vector", dimensions, v.len()));
            }
            model.class_vector_mut(s).copy_from_slice(v);
        }
        model.sample_counts = sample_counts;
        model.noised = noised;
        Ok(model)
    }

    /// Bundles each class's hypervectors into its prototype.
    pub fn train(hypervectors: &[Hypervector], labels: &[usize], classes: usize) -> Result<Self> {
        if hypervectors.is_empty() {
            return Err(Error::invalid("cannot train on an empty sample set"));
        }
        if hypervectors.len() != labels.len() {
            return Err(Error::dimension("labels", hypervectors.len(), labels.len()));
        }
        let mut model = ClassModel::zeros(classes, hypervectors[0].len())?;
        for (h, &label) in hypervectors.iter().zip(labels) {
            model.check_label(label)?;
            model.check_query(h)?;
            model.bundle(label, h, 1.0);
            model.sample_counts[label] += 1;
        }
        Ok(model)
    }

    pub fn classes(&self) -> usize {
        self.sample_counts.len()
    }

    pub fn dimensions(&self) -> usize {
        self.dimensions
    }

    pub fn sample_counts(&self) -> &[u64] {
        &self.sample_counts
    }

    pub fn is_noised(&self) -> bool {
        self.noised
    }

    pub(crate) fn set_noised(&mut self, noised: bool) {
        self.noised = noised;
    }

    pub(crate) fn set_sample_counts(&mut self, counts: Vec<u64>) {
        debug_assert_eq!(counts.len(), self.classes());
        self.sample_counts = counts;
    }

    pub fn class_vector(&self, class: usize) -> &[f64] {
        &self.vectors[class * self.dimensions..(class + 1) * self.dimensions]
    }

    pub(crate) fn class_vector_mut(&mut self, class: usize) -> &mut [f64] {
        &mut self.vectors[class * self.dimensions..(class + 1) * self.dimensions]
    }

    /// All class vectors, class-major.
    pub fn as_flat(&self) -> &[f64] {
        &self.vectors
    }

    /// Cosine similarity of the query to every class; argmax with ties going
    /// to the lowest class index. An all-zero class scores 0.
    pub fn infer(&self, query: &Hypervector) -> Result<Prediction> {
        self.check_query(query)?;
        let query_norm = (query.len() as f64).sqrt();
        let similarities: Vec<f64> = (0..self.classes())
            .map(|s| {
                let c = self.class_vector(s);
                let (dot, norm_sq) = c
                    .iter()
                    .zip(query.components())
                    .fold((0.0, 0.0), |(dot, nsq), (&v, &q)| {
                        (dot + v * f64::from(q), nsq + v * v)
                    });
                if norm_sq == 0.0 {
                    0.0
                } else {
                    dot / (norm_sq.sqrt() * query_norm)
                }
            })
            .collect();
        let class = argmax_lowest(&similarities);
        Ok(Prediction {
            class,
            similarities,
        })
    }

    /// One in-order pass of mistake-driven correction. Each misprediction
    /// adds the hypervector to its true class and subtracts it from the
    /// predicted one; later samples see the updated model.
    pub fn retrain(&self, hypervectors: &[Hypervector], labels: &[usize]) -> Result<Self> {
        let mut model = self.clone();
        model.retrain_in_place(hypervectors, labels)?;
        Ok(model)
    }

    /// As [`retrain`](Self::retrain), returning the number of corrections.
    pub fn retrain_in_place(
        &mut self,
        hypervectors: &[Hypervector],
        labels: &[usize],
    ) -> Result<usize> {
        if hypervectors.len() != labels.len() {
            return Err(Error::dimension("labels", hypervectors.len(), labels.len()));
        }
        let mut corrections = 0;
        for (h, &label) in hypervectors.iter().zip(labels) {
            self.check_label(label)?;
            let predicted = self.infer(h)?.class;
            if predicted != label {
                self.bundle(label, h, 1.0);
                self.bundle(predicted, h, -1.0);
                self.sample_counts[label] = self.sample_counts[label].saturating_add(1);
                corrections += 1;
            }
        }
        Ok(corrections)
    }

    fn bundle(&mut self, class: usize, h: &Hypervector, sign: f64) {
        for (v, &c) in self.class_vector_mut(class).iter_mut().zip(h.components()) {
            *v += sign * f64::from(c);
        }
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.classes() {
            return Err(Error::invalid(format!(
                "label {label} out of range for {} classes",
                self.classes()
            )));
        }
        Ok(())
    }

    fn check_query(&self, h: &Hypervector) -> Result<()> {
        if h.len() != self.dimensions {
            return Err(Error::dimension("hypervector", self.dimensions, h.len()));
        }
        Ok(())
    }
}

/// Cosines closer than this count as tied, so that rounding never decides
/// a tie.
const TIE_TOLERANCE: f64 = 1e-12;

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v - values[best] > TIE_TOLERANCE {
            best = i;
        }
    }
    best
}
