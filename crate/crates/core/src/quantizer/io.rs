//! Binary codebook files.
//!
//! Layout, all fields little-endian:
//!
//! | offset | type      | field                          |
//! |--------|-----------|--------------------------------|
//! | 0      | [u8; 8]   | magic `CSICBK01`               |
//! | 8      | u64       | dim                            |
//! | 16     | u64       | size                           |
//! | 24     | f64       | bits_per_dim                   |
//! | 32     | f64       | input_scale                    |
//! | 40     | u64       | training samples               |
//! | 48     | f64       | final training distortion      |
//! | 56     | u64       | Lloyd iterations               |
//! | 64     | f64 × size·dim | points, row-major         |

use std::io::{Read, Write};
use std::path::Path;

use super::{Codebook, TrainingMeta};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CSICBK01";
const HEADER_LEN: usize = 64;

impl Codebook {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.points.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.size as u64).to_le_bytes());
        out.extend_from_slice(&self.bits_per_dim.to_le_bytes());
        out.extend_from_slice(&self.input_scale.to_le_bytes());
        out.extend_from_slice(&(self.training_meta.n_training_samples as u64).to_le_bytes());
        out.extend_from_slice(&self.training_meta.final_distortion.to_le_bytes());
        out.extend_from_slice(&(self.training_meta.iterations as u64).to_le_bytes());
        for p in &self.points {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(Error::Format("missing CSICBK01 header".into()));
        }
        let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
        let dim = u64::from_le_bytes(word(1)) as usize;
        let size = u64::from_le_bytes(word(2)) as usize;
        let bits_per_dim = f64::from_le_bytes(word(3));
        let input_scale = f64::from_le_bytes(word(4));
        let meta = TrainingMeta {
            n_training_samples: u64::from_le_bytes(word(5)) as usize,
            final_distortion: f64::from_le_bytes(word(6)),
            iterations: u64::from_le_bytes(word(7)) as usize,
        };
        let expected = dim.checked_mul(size).and_then(|n| n.checked_mul(8)).map(|n| n + HEADER_LEN);
        if expected != Some(bytes.len()) {
            return Err(Error::Format(format!("expected {size}×{dim} points, file has {} bytes", bytes.len())));
        }
        let points: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let cb = Codebook::from_flat(points, dim, input_scale, meta)
            .map_err(|e| Error::Format(format!("inconsistent codebook: {e}")))?;
        if cb.bits_per_dim.to_bits() != bits_per_dim.to_bits() {
            return Err(Error::Format(format!("bits_per_dim {bits_per_dim} disagrees with size {size} and dim {dim}")));
        }
        Ok(cb)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Codebook::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Codebook::from_bytes(&std::fs::read(path)?)
    }
}
