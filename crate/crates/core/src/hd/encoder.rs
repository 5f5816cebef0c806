use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, DOMAIN_BASIS};

/// Samples per projection product when encoding in bulk.
const ENCODE_CHUNK: usize = 256;

/// Random projection and phase offsets defining the map
/// `h_d = sign(cos(<g_d, x> + b_d))`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBasis {
    seed: u64,
    /// D x F, row d holds g_d.
    projection: DMatrix<f64>,
    phase: DVector<f64>,
}

impl EncoderBasis {
    /// Draws a D x F standard-normal projection and D uniform phases in
    /// [0, 2π) from `seed`. Row-major draw order, so the matrix depends only
    /// on (D, F, seed).
    pub fn new(dimensions: usize, input_width: usize, seed: u64) -> Result<Self> {
        if dimensions == 0 || input_width == 0 {
            return Err(Error::invalid(format!(
                "basis needs positive dimensions and input width, got D={dimensions}, F={input_width}"
            )));
        }
        let mut rng = rng::stream(seed, DOMAIN_BASIS, 0);
        let len = dimensions
            .checked_mul(input_width)
            .ok_or_else(|| Error::invalid("basis size overflows"))?;
        let rows: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let projection = DMatrix::from_row_slice(dimensions, input_width, &rows);
        let phase = DVector::from_iterator(
            dimensions,
            (0..dimensions).map(|_| rng.random_range(0.0..TAU)),
        );
        Ok(EncoderBasis {
            seed,
            projection,
            phase,
        })
    }

    pub fn dimensions(&self) -> usize {
        self.projection.nrows()
    }

    pub fn input_width(&self) -> usize {
        self.projection.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn phase(&self) -> &[f64] {
        self.phase.as_slice()
    }

    pub fn encode(&self, x: &[f64]) -> Result<Hypervector> {
        let mut out = self.encode_batch(&[x])?;
        Ok(out.pop().expect("one input yields one hypervector"))
    }

    /// Encodes many inputs with one projection product per chunk. Produces
    /// exactly what [`encode`](Self::encode) would for each input.
    pub fn encode_batch<X: AsRef<[f64]>>(&self, inputs: &[X]) -> Result<Vec<Hypervector>> {
        let width = self.input_width();
        for x in inputs {
            let x = x.as_ref();
            if x.len() != width {
                return Err(Error::dimension("encode", width, x.len()));
            }
        }
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(ENCODE_CHUNK) {
            let columns = DMatrix::from_iterator(
                width,
                chunk.len(),
                chunk.iter().flat_map(|x| x.as_ref().iter().copied()),
            );
            let angles = &self.projection * columns;
            for column in angles.column_iter() {
                let components = column
                    .iter()
                    .zip(self.phase.iter())
                    .map(|(&a, &b)| if (a + b).cos() >= 0.0 { 1 } else { -1 })
                    .collect();
                out.push(Hypervector(components));
            }
        }
        Ok(out)
    }
}

/// A bipolar hypervector; every component is exactly -1 or +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypervector(Vec<i8>);

impl Hypervector {
    pub fn from_components(components: Vec<i8>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("hypervector must be non-empty"));
        }
        if let Some(bad) = components.iter().find(|&&c| c != 1 && c != -1) {
            return Err(Error::invalid(format!(
                "hypervector component {bad} is not bipolar"
            )));
        }
        Ok(Hypervector(components))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| f64::from(c)).collect()
    }

    pub fn negated(&self) -> Hypervector {
        Hypervector(self.0.iter().map(|&c| -c).collect())
    }

    pub fn hamming(&self, other: &Hypervector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Cosine similarity; for bipolar vectors this is `1 - 2·hamming/D`.
    pub fn cosine(&self, other: &Hypervector) -> f64 {
        let dot: i64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| i64::from(a * b))
            .sum();
        dot as f64 / self.0.len() as f64
    }
}
