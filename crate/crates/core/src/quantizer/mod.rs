//! Fixed-rate quantizers for the fronthaul.
//!
//! A [`Codebook`] holds `S = 2^(b·N)` reconstruction points in real
//! `N`-dimensional space. Complex vectors are quantized by applying the same
//! real codebook to the real and imaginary parts separately, so one complex
//! `N`-vector costs `2·b·N` fronthaul bits.
//!
//! Inputs are multiplied by `input_scale` before the nearest-neighbor search
//! and reconstructions are divided by it, so points live in the normalized
//! domain the codebook was trained in.

mod io;
mod lbg;
mod scalar;

pub use lbg::{lbg_train, LbgOptions, LbgOutcome};
pub use scalar::{gaussian_optimal_loading, uniform_scalar_codebook, uniform_scalar_distortion};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVec;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n_training_samples: usize,
    pub final_distortion: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    /// Row-major `size × dim`.
    points: Vec<f64>,
    dim: usize,
    size: usize,
    bits_per_dim: f64,
    input_scale: f64,
    pub training_meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedValue {
    pub index: usize,
    pub reconstruction: Vec<f64>,
}

impl Codebook {
    /// Builds a codebook from row-major points; `points.len()` must be
    /// `size · dim` with `size` a power of two.
    pub fn from_flat(points: Vec<f64>, dim: usize, input_scale: f64, training_meta: TrainingMeta) -> Result<Self> {
        if dim == 0 || points.is_empty() || points.len() % dim != 0 {
            return Err(Error::invalid(format!("codebook: {} values do not form {dim}-dimensional points", points.len())));
        }
        let size = points.len() / dim;
        if !size.is_power_of_two() {
            return Err(Error::invalid(format!("codebook size {size} is not a power of two")));
        }
        if !(input_scale > 0.0 && input_scale.is_finite()) {
            return Err(Error::invalid(format!("input scale {input_scale} must be positive and finite")));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("codebook contains non-finite values"));
        }
        let cb = Codebook {
            bits_per_dim: size.trailing_zeros() as f64 / dim as f64,
            points,
            dim,
            size,
            input_scale,
            training_meta,
        };
        for i in 0..size {
            for j in 0..i {
                if cb.point(i) == cb.point(j) {
                    return Err(Error::invalid(format!("codebook points {j} and {i} coincide")));
                }
            }
        }
        Ok(cb)
    }

    pub fn from_points(points: &[Vec<f64>], input_scale: f64) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("codebook points have different dimensions"));
        }
        Codebook::from_flat(points.concat(), dim, input_scale, TrainingMeta::default())
    }

    /// Same points, new normalization factor.
    pub fn with_input_scale(mut self, input_scale: f64) -> Result<Self> {
        if !(input_scale > 0.0 && input_scale.is_finite()) {
            return Err(Error::invalid(format!("input scale {input_scale} must be positive and finite")));
        }
        self.input_scale = input_scale;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bits_per_dim(&self) -> f64 {
        self.bits_per_dim
    }

    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    /// Point `i` in the normalized domain.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    /// Index of the nearest point to an already-scaled input, lowest index on
    /// ties, together with the squared distance.
    pub fn nearest_scaled(&self, x: &[f64]) -> (usize, f64) {
        nearest(&self.points, self.dim, x)
    }

    pub fn reconstruct(&self, index: usize) -> Vec<f64> {
        self.point(index).iter().map(|v| v / self.input_scale).collect()
    }

    pub fn quantize(&self, x: &[f64]) -> Result<QuantizedValue> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!("input dimension {} does not match codebook dimension {}", x.len(), self.dim)));
        }
        let scaled: Vec<f64> = x.iter().map(|v| v * self.input_scale).collect();
        let (index, _) = self.nearest_scaled(&scaled);
        Ok(QuantizedValue { index, reconstruction: self.reconstruct(index) })
    }

    /// Quantizes real and imaginary parts separately with this codebook.
    pub fn quantize_complex(&self, x: &CVec) -> Result<CVec> {
        let re: Vec<f64> = x.iter().map(|z| z.re).collect();
        let im: Vec<f64> = x.iter().map(|z| z.im).collect();
        let qr = self.quantize(&re)?.reconstruction;
        let qi = self.quantize(&im)?.reconstruction;
        Ok(CVec::from_iterator(x.len(), qr.into_iter().zip(qi).map(|(r, i)| Complex64::new(r, i))))
    }
}

/// Exhaustive nearest-neighbor search over row-major points; ties go to the
/// lowest index.
pub(crate) fn nearest(points: &[f64], dim: usize, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.chunks_exact(dim).enumerate() {
        let mut d = 0.0;
        for (a, b) in p.iter().zip(x) {
            let t = a - b;
            d += t * t;
            if d >= best.1 {
                break;
            }
        }
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// A quantizer for complex `N`-vectors as seen by the estimation pipelines.
pub trait ComplexQuantizer: Send + Sync {
    fn dim(&self) -> usize;
    fn quantize_complex(&self, x: &CVec) -> Result<CVec>;
}

/// Joint vector quantization of all `N` antennas.
impl ComplexQuantizer for Codebook {
    fn dim(&self) -> usize {
        self.dim
    }

    fn quantize_complex(&self, x: &CVec) -> Result<CVec> {
        Codebook::quantize_complex(self, x)
    }
}

/// Independent quantization of each antenna with a one-dimensional codebook.
#[derive(Debug, Clone)]
pub struct PerAntenna {
    pub codebook: Codebook,
    pub n_antennas: usize,
}

impl PerAntenna {
    pub fn new(codebook: Codebook, n_antennas: usize) -> Result<Self> {
        if codebook.dim() != 1 {
            return Err(Error::invalid("per-antenna quantization needs a one-dimensional codebook"));
        }
        Ok(PerAntenna { codebook, n_antennas })
    }
}

impl ComplexQuantizer for PerAntenna {
    fn dim(&self) -> usize {
        self.n_antennas
    }

    fn quantize_complex(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.n_antennas {
            return Err(Error::invalid(format!("input dimension {} does not match {} antennas", x.len(), self.n_antennas)));
        }
        let cb = &self.codebook;
        let one = |v: f64| cb.reconstruct(cb.nearest_scaled(&[v * cb.input_scale()]).0)[0];
        Ok(x.map(|z| Complex64::new(one(z.re), one(z.im))))
    }
}

/// Infinite-resolution hook: returns its input unchanged.
#[derive(Debug, Clone, Copy)]
pub struct Passthrough {
    pub dim: usize,
}

impl ComplexQuantizer for Passthrough {
    fn dim(&self) -> usize {
        self.dim
    }

    fn quantize_complex(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.dim {
            return Err(Error::invalid("passthrough dimension mismatch"));
        }
        Ok(x.clone())
    }
}
