//! Spatially correlated channels from the local scattering model.
//!
//! A user seen by an AP at nominal azimuth `θ` arrives with a random angular
//! deviation `δ`, so antenna pair `(a, b)` of a uniform linear array with
//! spacing `d_H` wavelengths has correlation
//! `E[exp(j·2π·d_H·(a−b)·sin(θ + δ))]`. Channel draws use the eigen factors of
//! that matrix: `g = √β · U · Λ^{1/2} · h` with white `h`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_defect, hermitian_eigen, CMat, CVec};
use crate::rng::complex_normal;

/// Gauss–Hermite nodes for the Gaussian angular density.
pub const GAUSS_HERMITE_NODES: usize = 64;
/// Simpson points for the uniform angular density (odd).
pub const SIMPSON_POINTS: usize = 1025;
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngularDistribution {
    #[default]
    Gaussian,
    /// Uniform on `[θ − √3σ, θ + √3σ]`, i.e. the same standard deviation.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub nominal_angle_rad: f64,
    pub angular_spread_std_rad: f64,
    /// Antenna spacing in wavelengths.
    pub antenna_spacing: f64,
    pub n_antennas: usize,
    pub angular_distribution: AngularDistribution,
}

/// Gauss–Hermite rule for the weight `exp(−x²)`; weights sum to `√π`.
///
/// Newton iteration on the orthonormal Hermite recurrence, seeded with the
/// usual asymptotic guesses for the largest roots.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(−1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..(n + 1) / 2 {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Angular samples `θ̄` and probability weights (summing to one) for `spec`.
fn angle_rule(spec: &CorrelationSpec) -> (Vec<f64>, Vec<f64>) {
    let (theta, sigma) = (spec.nominal_angle_rad, spec.angular_spread_std_rad);
    if sigma == 0.0 {
        return (vec![theta], vec![1.0]);
    }
    match spec.angular_distribution {
        AngularDistribution::Gaussian => {
            let (nodes, weights) = gauss_hermite(GAUSS_HERMITE_NODES);
            let total: f64 = weights.iter().sum();
            let angles = nodes.iter().map(|x| theta + 2f64.sqrt() * sigma * x).collect();
            (angles, weights.iter().map(|w| w / total).collect())
        }
        AngularDistribution::Uniform => {
            let half = 3f64.sqrt() * sigma;
            let n = SIMPSON_POINTS;
            let h = 2.0 * half / (n - 1) as f64;
            let angles = (0..n).map(|i| theta - half + i as f64 * h).collect();
            let density = 1.0 / (2.0 * half);
            let weights = (0..n)
                .map(|i| {
                    let s = if i == 0 || i == n - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    s * h / 3.0 * density
                })
                .collect();
            (angles, weights)
        }
    }
}

/// Local-scattering correlation matrix (N×N, Hermitian Toeplitz, unit diagonal).
pub fn correlation_matrix(spec: &CorrelationSpec) -> Result<CMat> {
    if !(spec.angular_spread_std_rad >= 0.0) {
        return Err(Error::invalid(format!("angular spread {} must be non-negative", spec.angular_spread_std_rad)));
    }
    if !(spec.antenna_spacing > 0.0) || spec.n_antennas == 0 {
        return Err(Error::invalid("antenna spacing must be positive and N at least 1"));
    }
    let n = spec.n_antennas;
    let (angles, weights) = angle_rule(spec);
    // first column: lag a − b = m ≥ 0
    let lags: Vec<Complex64> = (0..n)
        .map(|m| {
            if m == 0 {
                return c(1.0, 0.0);
            }
            angles
                .iter()
                .zip(&weights)
                .map(|(ang, w)| Complex64::from_polar(*w, 2.0 * PI * spec.antenna_spacing * m as f64 * ang.sin()))
                .sum()
        })
        .collect();
    Ok(CMat::from_fn(n, n, |a, b| if a >= b { lags[a - b] } else { lags[b - a].conj() }))
}

#[derive(Debug, Clone)]
pub struct KlFactors {
    /// N×r, orthonormal columns.
    pub eigvecs: CMat,
    /// Length r, positive, descending.
    pub eigvals: Vec<f64>,
    pub rank: usize,
}

/// Top-`r` eigenpairs of a Hermitian PSD matrix, where `r` counts eigenvalues
/// above `rank_tol · λ_max`.
pub fn kl_factors(r: &CMat, rank_tol: f64) -> Result<KlFactors> {
    if !r.is_square() {
        return Err(Error::invalid("kl_factors: matrix is not square"));
    }
    let defect = hermitian_defect(r);
    if defect > 1e-10 {
        return Err(Error::invalid(format!("kl_factors: matrix is not Hermitian (relative defect {defect:.3e})")));
    }
    let (values, vectors) = hermitian_eigen(r);
    let lmax = values.first().copied().unwrap_or(0.0).max(0.0);
    let rank = values.iter().take_while(|&&v| v.max(0.0) > rank_tol * lmax).count();
    Ok(KlFactors {
        eigvecs: vectors.columns(0, rank).into_owned(),
        eigvals: values[..rank].to_vec(),
        rank,
    })
}

/// Per-link covariance `Σ = β·R` with its Karhunen–Loève factors.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub sigma: CMat,
    pub corr: CMat,
    pub eigvecs: CMat,
    pub eigvals: Vec<f64>,
    pub rank: usize,
    pub beta: f64,
    /// `√β · U · Λ^{1/2}`, cached for sampling.
    colorer: CMat,
}

impl CovarianceModel {
    pub fn new(corr: CMat, beta: f64, rank_tol: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("large-scale gain {beta} must be positive and finite")));
        }
        let kl = kl_factors(&corr, rank_tol)?;
        let mut colorer = kl.eigvecs.clone();
        for (j, lambda) in kl.eigvals.iter().enumerate() {
            colorer.column_mut(j).scale_mut((beta * lambda).sqrt());
        }
        Ok(CovarianceModel {
            sigma: corr.map(|v| v * beta),
            corr,
            eigvecs: kl.eigvecs,
            eigvals: kl.eigvals,
            rank: kl.rank,
            beta,
            colorer,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.corr.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        sample_channel(self, rng)
    }
}

/// One draw of `g ~ CN(0, β·R)`.
pub fn sample_channel<R: Rng + ?Sized>(model: &CovarianceModel, rng: &mut R) -> CVec {
    let h = CVec::from_fn(model.rank, |_, _| complex_normal(rng));
    &model.colorer * h
}

/// Global channel `G` (M×K, M = L·N) stacked from per-AP blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g: CMat,
    pub n_aps: usize,
    pub n_antennas: usize,
}

impl ChannelRealization {
    pub fn block(&self, l: usize, k: usize) -> CVec {
        self.g.view((l * self.n_antennas, k), (self.n_antennas, 1)).column(0).into_owned()
    }

    /// The N×K block seen by AP `l`.
    pub fn ap_rows(&self, l: usize) -> CMat {
        self.g.rows(l * self.n_antennas, self.n_antennas).into_owned()
    }
}

/// Stacks `blocks[l][k]` (length-N vectors) into `G`.
pub fn assemble_global(blocks: &[Vec<CVec>]) -> Result<ChannelRealization> {
    let n_aps = blocks.len();
    let k = blocks.first().map(|row| row.len()).unwrap_or(0);
    let n = blocks.first().and_then(|row| row.first()).map(|v| v.len()).unwrap_or(0);
    if n_aps == 0 || k == 0 || n == 0 {
        return Err(Error::invalid("assemble_global: empty input"));
    }
    if blocks.iter().any(|row| row.len() != k || row.iter().any(|v| v.len() != n)) {
        return Err(Error::invalid("assemble_global: ragged block grid"));
    }
    let g = CMat::from_fn(n_aps * n, k, |m, col| blocks[m / n][col][m % n]);
    Ok(ChannelRealization { g, n_aps, n_antennas: n })
}
