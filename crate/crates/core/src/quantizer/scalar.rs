//! Uniform mid-rise scalar quantizer, the per-antenna baseline.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{Codebook, TrainingMeta};
use crate::error::{Error, Result};

/// `2^bits` mid-rise levels `±(i + ½)·Δ` with `Δ = 2γσ / 2^bits`. Inputs
/// beyond `±γσ` fall into the outermost cells.
pub fn uniform_scalar_codebook(bits: u32, input_std: f64, loading_factor: f64) -> Result<Codebook> {
    if bits == 0 || bits > 16 {
        return Err(Error::invalid(format!("scalar quantizer bits {bits} outside 1..=16")));
    }
    if !(input_std > 0.0 && loading_factor > 0.0) {
        return Err(Error::invalid("scalar quantizer needs positive input std and loading factor"));
    }
    let levels = 1usize << bits;
    let step = 2.0 * loading_factor * input_std / levels as f64;
    let half = levels / 2;
    let points: Vec<f64> = (0..levels).map(|j| (j as f64 - half as f64 + 0.5) * step).collect();
    Codebook::from_flat(points, 1, 1.0, TrainingMeta::default())
}

/// Mean squared error of the `bits`-bit uniform quantizer with loading
/// `gamma` on a unit-variance Gaussian, in closed form.
pub fn uniform_scalar_distortion(bits: u32, gamma: f64) -> f64 {
    let normal = Normal::standard();
    let levels = 1usize << bits;
    let step = 2.0 * gamma / levels as f64;
    let half = levels / 2;
    // ∫_a^b (x − c)² φ(x) dx = (1 + c²)[Φ] − [xφ] + 2c[φ]
    let cell = |a: f64, b: f64, c: f64| {
        let (pa, pb) = (normal.pdf(a), if b.is_finite() { normal.pdf(b) } else { 0.0 });
        let (ca, cb) = (normal.cdf(a), if b.is_finite() { normal.cdf(b) } else { 1.0 });
        let xb = if b.is_finite() { b * pb } else { 0.0 };
        (1.0 + c * c) * (cb - ca) - (xb - a * pa) + 2.0 * c * (pb - pa)
    };
    2.0 * (0..half)
        .map(|i| {
            let a = i as f64 * step;
            let b = if i + 1 == half { f64::INFINITY } else { (i + 1) as f64 * step };
            cell(a, b, (i as f64 + 0.5) * step)
        })
        .sum::<f64>()
}

/// Loading factor `γ` minimizing [`uniform_scalar_distortion`] (golden-section
/// search on `[0.25, 8]`).
pub fn gaussian_optimal_loading(bits: u32) -> f64 {
    let f = |g: f64| uniform_scalar_distortion(bits, g);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.25, 8.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    while b - a > 1e-10 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    0.5 * (a + b)
}
