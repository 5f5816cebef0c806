use std::f64::consts::PI;

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};

use super::{EncoderBasis, Hypervector};

/// Least-squares inverse of the encoder.
///
/// Each component is linearized as `<g_d, x> = wrap(acos(clamp(h_d)) - b_d)`
/// and the overdetermined system is solved through a Cholesky factor of the
/// Gram matrix `GᵀG`, which is computed once per basis.
pub struct Decoder<'a> {
    basis: &'a EncoderBasis,
    gram: Cholesky<f64, Dyn>,
}

impl<'a> Decoder<'a> {
    pub fn new(basis: &'a EncoderBasis) -> Result<Self> {
        let (equations, unknowns) = (basis.dimensions(), basis.input_width());
        if equations < unknowns {
            return Err(Error::Underdetermined {
                equations,
                unknowns,
            });
        }
        let projection = basis.projection();
        let gram = projection
            .tr_mul(projection)
            .cholesky()
            .ok_or(Error::Underdetermined {
                equations,
                unknowns,
            })?;
        Ok(Decoder { basis, gram })
    }

    /// Reconstructs an input-space vector from a (possibly noisy, real)
    /// hypervector.
    pub fn decode(&self, h: &[f64]) -> Result<Vec<f64>> {
        let dims = self.basis.dimensions();
        if h.len() != dims {
            return Err(Error::dimension("decode", dims, h.len()));
        }
        let targets = DVector::from_iterator(
            dims,
            h.iter()
                .zip(self.basis.phase())
                .map(|(&v, &b)| wrap(v.clamp(-1.0, 1.0).acos() - b)),
        );
        let rhs = self.basis.projection().tr_mul(&targets);
        Ok(self.gram.solve(&rhs).as_slice().to_vec())
    }

    pub fn decode_hypervector(&self, h: &Hypervector) -> Result<Vec<f64>> {
        self.decode(&h.to_f64())
    }
}

/// A decoded input-space vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedSample {
    pub values: Vec<f64>,
    /// Fidelity against the original, once known.
    pub psnr_db: Option<f64>,
}

/// One-shot decode. Prefer [`Decoder`] when decoding many vectors against
/// one basis.
pub fn decode(basis: &EncoderBasis, h: &[f64]) -> Result<Vec<f64>> {
    Decoder::new(basis)?.decode(h)
}

/// Maps an angle into [-π, π).
fn wrap(angle: f64) -> f64 {
    (angle + PI).rem_euclid(2.0 * PI) - PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underdetermined_rejected() {
        let basis = EncoderBasis::new(7, 8, 1).unwrap();
        assert!(matches!(
            Decoder::new(&basis),
            Err(Error::Underdetermined {
                equations: 7,
                unknowns: 8
            })
        ));
    }

    #[test]
    fn wrap_range() {
        for a in [-10.0, -PI, -1.0, 0.0, 1.0, PI, 7.5, 100.0] {
            let w = wrap(a);
            assert!((-PI..PI).contains(&w), "{a} -> {w}");
            let turns = (a - w) / (2.0 * PI);
            assert!((turns - turns.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn decode_is_deterministic() {
        let basis = EncoderBasis::new(80, 8, 4).unwrap();
        let x = [0.1, 0.2, 0.1, -0.1, 0.0, 0.3, -0.2, 0.1];
        let h = basis.encode(&x).unwrap();
        let decoder = Decoder::new(&basis).unwrap();
        let a = decoder.decode_hypervector(&h).unwrap();
        assert_eq!(a, decoder.decode_hypervector(&h).unwrap());
        assert_eq!(a, decode(&basis, &h.to_f64()).unwrap());
    }

    #[test]
    fn width_mismatch() {
        let basis = EncoderBasis::new(16, 2, 1).unwrap();
        let decoder = Decoder::new(&basis).unwrap();
        assert!(matches!(decoder.decode(&[1.0; 3]), Err(Error::Dimension { .. })));
    }
}
