//! Binary model snapshot.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field       | bytes |
//! |-------------|-------|
//! | magic       | 8, `FEDHDSNP` |
//! | version     | 4, u32 = 1 |
//! | D, S, K, round | 4 × u64 |
//! | noised      | 1, 0 or 1 |
//! | basis_seed, noise_seed | 2 × u64 |
//! | sample_counts | S × u64 |
//! | class vectors | S·D × f64, class-major |

use crate::error::{Error, Result};
use crate::hd::ClassModel;

const MAGIC: &[u8; 8] = b"FEDHDSNP";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 * 8 + 1 + 2 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub model: ClassModel,
    pub clients: u64,
    pub round: u64,
    pub basis_seed: u64,
    pub noise_seed: u64,
}

impl Snapshot {
    pub fn encode(&self) -> Vec<u8> {
        let m = &self.model;
        let mut out = Vec::with_capacity(HEADER_LEN + m.classes() * (1 + m.dimensions()) * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [m.dimensions() as u64, m.classes() as u64, self.clients, self.round] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(u8::from(m.is_noised()));
        out.extend_from_slice(&self.basis_seed.to_le_bytes());
        out.extend_from_slice(&self.noise_seed.to_le_bytes());
        for c in m.sample_counts() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for v in m.as_flat() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dimensions = r.u64()?;
        let classes = r.u64()?;
        let clients = r.u64()?;
        let round = r.u64()?;
        let noised = match r.take(1)?[0] {
            0 => false,
            1 => true,
            b => return Err(Error::Snapshot(format!("invalid noised flag {b}"))),
        };
        let basis_seed = r.u64()?;
        let noise_seed = r.u64()?;

        let body = classes
            .checked_mul(dimensions)
            .and_then(|n| n.checked_add(classes))
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Snapshot("shape overflows".into()))?;
        let remaining = (bytes.len() - r.pos) as u64;
        if body != remaining {
            return Err(Error::Snapshot(format!(
                "expected {body} payload bytes for S={classes}, D={dimensions}, found {remaining}"
            )));
        }
        let (classes, dimensions) = (classes as usize, dimensions as usize);
        let counts = (0..classes).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let mut vectors = Vec::with_capacity(classes);
        for _ in 0..classes {
            let v = (0..dimensions)
                .map(|_| {
                    let x = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(Error::Snapshot("non-finite class component".into()))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            vectors.push(v);
        }
        let model = ClassModel::from_parts(vectors, counts, noised)
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(Snapshot {
            model,
            clients,
            round,
            basis_seed,
            noise_seed,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Snapshot("truncated snapshot".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
