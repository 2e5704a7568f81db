//! Channel estimation pipelines.
//!
//! Estimate-and-Quantize (EQ): each AP projects its pilot observation on
//! `φ_k`, applies the per-link LMMSE gain `Γ = Σ(Σ + I/(τρ_p))⁻¹` and sends the
//! quantized estimate. The quantizer sees `ĝ/√β`, so one codebook per AP
//! serves every user.
//!
//! Quantize-and-Estimate (QE): each AP quantizes the `τ` columns of its pilot
//! observation and the central processor applies the Bussgang-aware LMMSE
//! gain `Γ = Σ Fᴴ (F Σ Fᴴ + (F Fᴴ + C_dd)/(τρ_p))⁻¹`. The global `F̃`, `Σ_k`
//! and distortion covariance are block diagonal over APs, so the global gain
//! is the block-diagonal assembly of per-AP gains.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::bussgang::BussgangModel;
use crate::error::{Error, Result};
use crate::linalg::{c, right_solve_hpd, trace_re, CMat, CVec};
use crate::pilots::{project_pilot, PilotBook, ReceivedPilots};
use crate::quantizer::ComplexQuantizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "VQ_EQ")]
    VqEq,
    #[serde(rename = "VQ_QE")]
    VqQe,
    #[serde(rename = "SQ_EQ")]
    SqEq,
    #[serde(rename = "SQ_QE")]
    SqQe,
    #[serde(rename = "UNQUANTIZED")]
    Unquantized,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::VqEq, Scheme::VqQe, Scheme::SqEq, Scheme::SqQe, Scheme::Unquantized];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::VqEq => "VQ_EQ",
            Scheme::VqQe => "VQ_QE",
            Scheme::SqEq => "SQ_EQ",
            Scheme::SqQe => "SQ_QE",
            Scheme::Unquantized => "UNQUANTIZED",
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Scheme::VqEq | Scheme::VqQe)
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, Scheme::SqEq | Scheme::SqQe)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown scheme {s:?}")))
    }
}

/// Per-link EQ gain `Γ_lk`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqGain {
    pub gamma: CMat,
}

pub fn eq_gain(sigma: &CMat, tau_rho: f64) -> Result<EqGain> {
    if !(tau_rho > 0.0) {
        return Err(Error::invalid(format!("eq_gain: τρ_p = {tau_rho} must be positive")));
    }
    let n = sigma.nrows();
    let omega = sigma + CMat::identity(n, n) * c(1.0 / tau_rho, 0.0);
    let gamma = right_solve_hpd(sigma, &omega).ok_or_else(|| Error::numerical("eq_gain: Ω is not positive definite"))?;
    Ok(EqGain { gamma })
}

/// Per-user LMMSE estimates at one AP: `ĝ_k = Γ_k · r_k`.
pub fn estimate_eq(y: &ReceivedPilots, pilots: &PilotBook, gains: &[EqGain]) -> Result<Vec<CVec>> {
    if gains.len() != pilots.n_users() {
        return Err(Error::invalid("estimate_eq: one gain per user required"));
    }
    let tau_rho = pilots.tau() as f64 * y.rho_p;
    Ok(gains
        .iter()
        .enumerate()
        .map(|(k, gain)| &gain.gamma * project_pilot(&y.y, &pilots.sequence(k), tau_rho))
        .collect())
}

/// Global channel estimate produced by one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiEstimate {
    pub g_hat: CMat,
    pub scheme: Scheme,
}

/// Stacks per-AP, per-user vectors (`blocks[l][k]`) into an M×K matrix.
pub fn stack(blocks: &[Vec<CVec>]) -> Result<CMat> {
    Ok(crate::channel::assemble_global(blocks)?.g)
}

/// EQ fronthaul step: `ĝ_lk` is divided by `√β_lk`, quantized by AP `l`'s
/// quantizer and multiplied back.
pub fn eq_quantize(
    estimates: &[Vec<CVec>],
    quantizers: &[&dyn ComplexQuantizer],
    beta: &nalgebra::DMatrix<f64>,
    scheme: Scheme,
) -> Result<CsiEstimate> {
    if quantizers.len() != estimates.len() {
        return Err(Error::invalid("eq_quantize: one quantizer per AP required"));
    }
    let blocks = estimates
        .iter()
        .enumerate()
        .map(|(l, row)| {
            row.iter()
                .enumerate()
                .map(|(k, g)| {
                    let s = beta[(l, k)].sqrt();
                    Ok(quantizers[l].quantize_complex(&(g / c(s, 0.0)))? * c(s, 0.0))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CsiEstimate { g_hat: stack(&blocks)?, scheme })
}

/// QE fronthaul step: every column of `Y_l` quantized independently.
pub fn qe_quantize_pilots(y: &ReceivedPilots, quantizer: &dyn ComplexQuantizer) -> Result<ReceivedPilots> {
    let mut out = y.y.clone();
    for (t, col) in y.y.column_iter().enumerate() {
        let q = quantizer.quantize_complex(&col.into_owned())?;
        out.set_column(t, &q);
    }
    Ok(ReceivedPilots { y: out, rho_p: y.rho_p })
}

/// Per-AP blocks of the QE gain `Γ_qp,k` for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct QeGain {
    pub gamma: Vec<CMat>,
}

impl QeGain {
    /// The dense M×M block-diagonal gain.
    pub fn global(&self) -> CMat {
        block_diagonal(&self.gamma)
    }
}

pub fn block_diagonal(blocks: &[CMat]) -> CMat {
    let m: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(m, m);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    out
}

/// QE gain for one user from its per-AP covariances `Σ_lk` and the per-AP
/// Bussgang models.
pub fn qe_gain(sigma_blocks: &[&CMat], bussgang: &[&BussgangModel], tau_rho: f64) -> Result<QeGain> {
    if sigma_blocks.len() != bussgang.len() {
        return Err(Error::invalid("qe_gain: one Bussgang model per AP required"));
    }
    if !(tau_rho > 0.0) {
        return Err(Error::invalid(format!("qe_gain: τρ_p = {tau_rho} must be positive")));
    }
    let gamma = sigma_blocks
        .iter()
        .zip(bussgang)
        .enumerate()
        .map(|(l, (sigma, bg))| {
            let f = &bg.gain;
            let sf = *sigma * f.adjoint();
            let noise = (f * f.adjoint() + &bg.distortion_cov) * c(1.0 / tau_rho, 0.0);
            let omega = f * &sf + noise;
            right_solve_hpd(&sf, &omega)
                .or_else(|| {
                    let n = omega.nrows();
                    let eps = 1e-12 * trace_re(&omega).max(f64::MIN_POSITIVE);
                    right_solve_hpd(&sf, &(&omega + CMat::identity(n, n) * c(eps, 0.0)))
                })
                .ok_or_else(|| Error::numerical(format!("qe_gain: Ω block of AP {l} is singular")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QeGain { gamma })
}

/// CPU-side QE estimate from the stacked quantized pilots (M×τ).
pub fn estimate_qe(y_q_all: &CMat, rho_p: f64, pilots: &PilotBook, gains: &[QeGain], scheme: Scheme) -> Result<CsiEstimate> {
    if gains.len() != pilots.n_users() {
        return Err(Error::invalid("estimate_qe: one gain per user required"));
    }
    let m = y_q_all.nrows();
    let tau_rho = pilots.tau() as f64 * rho_p;
    let mut g_hat = CMat::zeros(m, gains.len());
    for (k, gain) in gains.iter().enumerate() {
        let r = project_pilot(y_q_all, &pilots.sequence(k), tau_rho);
        let mut off = 0;
        for block in &gain.gamma {
            let n = block.nrows();
            let est = block * r.rows(off, n);
            g_hat.view_mut((off, k), (n, 1)).copy_from(&est);
            off += n;
        }
        if off != m {
            return Err(Error::invalid(format!("estimate_qe: gain covers {off} rows, pilots have {m}")));
        }
    }
    Ok(CsiEstimate { g_hat, scheme })
}

/// Stacks per-AP N×τ observations into the M×τ matrix seen by the CPU.
pub fn stack_pilots(per_ap: &[ReceivedPilots]) -> CMat {
    let n: usize = per_ap.iter().map(|y| y.y.nrows()).sum();
    let tau = per_ap.first().map(|y| y.y.ncols()).unwrap_or(0);
    let mut out = CMat::zeros(n, tau);
    let mut off = 0;
    for y in per_ap {
        out.rows_mut(off, y.y.nrows()).copy_from(&y.y);
        off += y.y.nrows();
    }
    out
}

/// Per-AP stages of the SQ baseline: the same EQ and QE pipelines run with a
/// [`crate::quantizer::PerAntenna`] quantizer, so the bit budget per AP and
/// sample is `N·b` real bits per real/imaginary part, exactly as for VQ.
/// The QE variant linearizes each antenna separately
/// ([`crate::bussgang::bussgang_diagonal_from_pairs`]).
pub fn baseline_sq_eq(
    estimates: &[Vec<CVec>],
    quantizers: &[&dyn ComplexQuantizer],
    beta: &nalgebra::DMatrix<f64>,
) -> Result<CsiEstimate> {
    eq_quantize(estimates, quantizers, beta, Scheme::SqEq)
}

pub fn baseline_sq_qe(
    received: &[ReceivedPilots],
    quantizers: &[&dyn ComplexQuantizer],
    pilots: &PilotBook,
    gains: &[QeGain],
) -> Result<CsiEstimate> {
    let rho_p = received.first().map(|y| y.rho_p).ok_or_else(|| Error::invalid("baseline_sq_qe: no APs"))?;
    let quantized = received
        .iter()
        .zip(quantizers)
        .map(|(y, q)| qe_quantize_pilots(y, *q))
        .collect::<Result<Vec<_>>>()?;
    estimate_qe(&stack_pilots(&quantized), rho_p, pilots, gains, Scheme::SqQe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bussgang::bussgang_from_pairs;
    use crate::channel::{correlation_matrix, AngularDistribution, CorrelationSpec, CovarianceModel};
    use crate::pilots::{generate_pilots, receive_pilots, PilotKind};
    use crate::quantizer::{Codebook, Passthrough};
    use crate::rng::{complex_normal, stream, Purpose};

    fn random_psd(n: usize, seed: u64) -> CMat {
        let mut rng = stream(seed, Purpose::Validation, &[]);
        let a = CMat::from_fn(n, n, |_, _| complex_normal(&mut rng));
        &a * a.adjoint()
    }

    #[test]
    fn eq_gain_examples() {
        let g = eq_gain(&CMat::identity(1, 1), 1.0).unwrap();
        assert!((g.gamma[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);

        let sigma = random_psd(3, 1);
        let g = eq_gain(&sigma, 1e12).unwrap();
        assert!((g.gamma - CMat::identity(3, 3)).norm() < 1e-9);

        // explicit 2×2 inverse as the independent route
        let sigma = random_psd(2, 2);
        let tr = 0.7;
        let o = &sigma + CMat::identity(2, 2) * c(1.0 / tr, 0.0);
        let det = o[(0, 0)] * o[(1, 1)] - o[(0, 1)] * o[(1, 0)];
        let inv = CMat::from_row_slice(2, 2, &[o[(1, 1)], -o[(0, 1)], -o[(1, 0)], o[(0, 0)]]) / det;
        let g = eq_gain(&sigma, tr).unwrap();
        assert!((&g.gamma - &sigma * inv).norm() < 1e-10);
        assert!(g.gamma.singular_values().max() < 1.0 + 1e-9);
        assert!(eq_gain(&sigma, 0.0).is_err());
    }

    #[test]
    fn noiseless_identity_gain_recovers_channel() {
        let mut rng = stream(3, Purpose::Fading, &[]);
        let pilots = generate_pilots(3, 3, PilotKind::Random, &mut rng).unwrap();
        let g = CMat::from_fn(2, 3, |_, _| complex_normal(&mut rng));
        let y = receive_pilots(&g, &pilots, 5.0, false, &mut rng).unwrap();
        let gains = vec![EqGain { gamma: CMat::identity(2, 2) }; 3];
        let est = estimate_eq(&y, &pilots, &gains).unwrap();
        for k in 0..3 {
            assert!((&est[k] - g.column(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_lmmse_closed_form_and_orthogonality() {
        let model = CovarianceModel::new(CMat::identity(1, 1), 1.0, 1e-12).unwrap();
        let mut rng = stream(4, Purpose::Trial, &[]);
        let tau_rho = 1.0;
        let pilots = generate_pilots(1, 1, PilotKind::Random, &mut rng).unwrap();
        let gains = vec![eq_gain(&model.sigma, tau_rho).unwrap()];
        let t = 100_000;
        let (mut se, mut cross) = (0.0, c(0.0, 0.0));
        for _ in 0..t {
            let g = model.sample(&mut rng);
            let y = receive_pilots(&CMat::from_column_slice(1, 1, g.as_slice()), &pilots, tau_rho, true, &mut rng).unwrap();
            let r = project_pilot(&y.y, &pilots.sequence(0), tau_rho);
            let est = &estimate_eq(&y, &pilots, &gains).unwrap()[0];
            se += (est[0] - g[0]).norm_sqr();
            cross += (est[0] - g[0]) * r[0].conj();
        }
        let mse = se / t as f64;
        let expect = 1.0 - 1.0 / (1.0 + 1.0 / tau_rho);
        assert!((mse - expect).abs() < 0.03 * expect, "{mse} vs {expect}");
        assert!((cross / t as f64).norm() < 3.0 / (t as f64).sqrt());
    }

    #[test]
    fn eq_quantize_hooks() {
        let mut rng = stream(5, Purpose::Fading, &[]);
        let est: Vec<Vec<CVec>> = (0..2).map(|_| (0..3).map(|_| CVec::from_fn(2, |_, _| complex_normal(&mut rng))).collect()).collect();
        let beta = nalgebra::DMatrix::from_fn(2, 3, |l, k| 1e-12 * (1 + l + k) as f64);
        let pass = Passthrough { dim: 2 };
        let q: Vec<&dyn ComplexQuantizer> = vec![&pass, &pass];
        let out = eq_quantize(&est, &q, &beta, Scheme::VqEq).unwrap();
        let direct = stack(&est).unwrap();
        assert!((out.g_hat - direct).norm() < 1e-12 * est[0][0].norm());
    }

    #[test]
    fn qe_quantize_range_and_order() {
        let mut rng = stream(6, Purpose::Pilots, &[]);
        let y = ReceivedPilots { y: CMat::from_fn(2, 5, |_, _| complex_normal(&mut rng)), rho_p: 1.0 };
        let cb = Codebook::from_points(&[vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]], 2.0).unwrap();
        let q = qe_quantize_pilots(&y, &cb).unwrap();
        for v in q.y.iter() {
            assert!(v.re.abs() == 0.5 && v.im.abs() == 0.5);
        }
        // per-column: reversing the column order commutes with quantization
        let rev = ReceivedPilots { y: CMat::from_fn(2, 5, |r, t| y.y[(r, 4 - t)]), rho_p: 1.0 };
        let qr = qe_quantize_pilots(&rev, &cb).unwrap();
        assert_eq!(qr.y, CMat::from_fn(2, 5, |r, t| q.y[(r, 4 - t)]));
        assert_eq!(qe_quantize_pilots(&y, &Passthrough { dim: 2 }).unwrap(), y);
    }

    #[test]
    fn qe_gain_reduces_to_eq_gain() {
        let sigma = random_psd(3, 7);
        let bg = BussgangModel::identity(3);
        let q = qe_gain(&[&sigma], &[&bg], 2.5).unwrap();
        let e = eq_gain(&sigma, 2.5).unwrap();
        assert_eq!(q.gamma[0], e.gamma);
    }

    #[test]
    fn qe_gain_scalar_one_bit() {
        let sigma_y: f64 = 1.7;
        let f = (2.0 / std::f64::consts::PI).sqrt() / sigma_y;
        let cdd = 1.0 - 2.0 / std::f64::consts::PI;
        let bg = BussgangModel {
            gain: CMat::from_element(1, 1, c(f, 0.0)),
            distortion_cov: CMat::from_element(1, 1, c(cdd, 0.0)),
            n_samples: 1,
        };
        let (s, tr) = (0.8, 3.0);
        let sigma = CMat::from_element(1, 1, c(s, 0.0));
        let g = qe_gain(&[&sigma], &[&bg], tr).unwrap().gamma[0][(0, 0)];
        let hand = s * f / (f * f * s + (f * f + cdd) / tr);
        assert!((g.re - hand).abs() < 1e-10 && g.im.abs() < 1e-15);
    }

    #[test]
    fn block_diagonal_gain_matches_dense_inverse() {
        let sig = [random_psd(2, 11), random_psd(2, 12)];
        let mut rng = stream(13, Purpose::Bussgang, &[]);
        let models: Vec<BussgangModel> = (0..2)
            .map(|_| {
                let xs: Vec<CVec> = (0..400).map(|_| CVec::from_fn(2, |_, _| complex_normal(&mut rng))).collect();
                let qs: Vec<CVec> = xs.iter().map(|x| x.map(|z| c(z.re.signum(), z.im.signum()))).collect();
                bussgang_from_pairs(&xs, &qs).unwrap()
            })
            .collect();
        let tr = 4.0;
        let q = qe_gain(&[&sig[0], &sig[1]], &[&models[0], &models[1]], tr).unwrap();

        let sigma = block_diagonal(&sig);
        let f = block_diagonal(&[models[0].gain.clone(), models[1].gain.clone()]);
        let d = block_diagonal(&[models[0].distortion_cov.clone(), models[1].distortion_cov.clone()]);
        let omega = &f * &sigma * f.adjoint() + (&f * f.adjoint() + d) * c(1.0 / tr, 0.0);
        let dense = &sigma * f.adjoint() * omega.try_inverse().unwrap();
        assert!((q.global() - &dense).norm() < 1e-8 * dense.norm());
    }

    #[test]
    fn qe_pipeline_degenerates_to_eq() {
        let mut rng = stream(14, Purpose::Fading, &[]);
        let spec = |theta| CorrelationSpec {
            nominal_angle_rad: theta,
            angular_spread_std_rad: 0.2,
            antenna_spacing: 0.5,
            n_antennas: 2,
            angular_distribution: AngularDistribution::Gaussian,
        };
        let (l_count, k_count, rho) = (2, 2, 3.0);
        let models: Vec<Vec<CovarianceModel>> = (0..l_count)
            .map(|l| (0..k_count).map(|k| CovarianceModel::new(correlation_matrix(&spec(0.3 * (l + 2 * k) as f64)).unwrap(), 0.5 + l as f64, 1e-12).unwrap()).collect())
            .collect();
        let pilots = generate_pilots(2, 2, PilotKind::Random, &mut rng).unwrap();
        let tau_rho = 2.0 * rho;
        let received: Vec<ReceivedPilots> = models
            .iter()
            .map(|row| {
                let g = CMat::from_columns(&row.iter().map(|m| m.sample(&mut rng)).collect::<Vec<_>>());
                receive_pilots(&g, &pilots, rho, true, &mut rng).unwrap()
            })
            .collect();
        let eq: Vec<Vec<CVec>> = received
            .iter()
            .zip(&models)
            .map(|(y, row)| {
                let gains: Vec<EqGain> = row.iter().map(|m| eq_gain(&m.sigma, tau_rho).unwrap()).collect();
                estimate_eq(y, &pilots, &gains).unwrap()
            })
            .collect();
        let id = BussgangModel::identity(2);
        let qe_gains: Vec<QeGain> = (0..k_count)
            .map(|k| qe_gain(&[&models[0][k].sigma, &models[1][k].sigma], &[&id, &id], tau_rho).unwrap())
            .collect();
        let qe = estimate_qe(&stack_pilots(&received), rho, &pilots, &qe_gains, Scheme::VqQe).unwrap();
        let eq = stack(&eq).unwrap();
        assert!((qe.g_hat - &eq).norm() <= 1e-10 * eq.norm());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("nope".parse::<Scheme>().is_err());
    }
}
