//! Everything fixed for one large-scale realization: geometry, covariances,
//! trained quantizers, Bussgang models and estimator gains.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::config::ExperimentConfig;
use super::metrics::{noise_power_w, rho_p};
use crate::bussgang::{bussgang_diagonal_from_pairs, bussgang_from_pairs, BussgangModel};
use crate::channel::{correlation_matrix, CorrelationSpec, CovarianceModel};
use crate::error::{Error, Result};
use crate::estimation::{eq_gain, qe_gain, EqGain, QeGain, Scheme};
use crate::linalg::{c, CMat, CVec};
use crate::pilots::{generate_pilots, receive_pilots, PilotBook};
use crate::quantizer::{gaussian_optimal_loading, lbg_train, uniform_scalar_codebook, Codebook, ComplexQuantizer, PerAntenna};
use crate::rng::{complex_normal, stream, Purpose, SimRng};
use crate::topology::{large_scale_fading, LargeScaleFading, NetworkLayout, PathLossParams};

/// Quantizers and Bussgang models of one AP. Entries for disabled schemes
/// are `None`.
#[derive(Debug, Clone, Default)]
pub struct ApQuantizers {
    pub vq_eq: Option<Codebook>,
    pub sq_eq: Option<PerAntenna>,
    pub vq_qe: Option<Codebook>,
    pub sq_qe: Option<PerAntenna>,
    pub bussgang_vq: Option<BussgangModel>,
    pub bussgang_sq: Option<BussgangModel>,
}

#[derive(Debug, Clone)]
pub struct LargeScaleContext {
    pub realization: usize,
    pub layout: NetworkLayout,
    pub fading: LargeScaleFading,
    /// Nominal angles `θ_lk` in radians.
    pub angles: DMatrix<f64>,
    /// `models[l][k]`.
    pub models: Vec<Vec<CovarianceModel>>,
    pub rho_p: f64,
    pub pilots: PilotBook,
    /// `eq_gains[l][k]`.
    pub eq_gains: Vec<Vec<EqGain>>,
    pub quantizers: Vec<ApQuantizers>,
    /// Per-user QE gains for VQ_QE and SQ_QE.
    pub qe_gains_vq: Option<Vec<QeGain>>,
    pub qe_gains_sq: Option<Vec<QeGain>>,
}

impl LargeScaleContext {
    pub fn tau_rho(&self) -> f64 {
        self.pilots.tau() as f64 * self.rho_p
    }

    pub fn n_aps(&self) -> usize {
        self.models.len()
    }

    pub fn n_users(&self) -> usize {
        self.pilots.n_users()
    }

    pub fn quantizers_for(&self, scheme: Scheme) -> Option<Vec<&dyn ComplexQuantizer>> {
        self.quantizers
            .iter()
            .map(|q| match scheme {
                Scheme::VqEq => q.vq_eq.as_ref().map(|c| c as &dyn ComplexQuantizer),
                Scheme::SqEq => q.sq_eq.as_ref().map(|c| c as &dyn ComplexQuantizer),
                Scheme::VqQe => q.vq_qe.as_ref().map(|c| c as &dyn ComplexQuantizer),
                Scheme::SqQe => q.sq_qe.as_ref().map(|c| c as &dyn ComplexQuantizer),
                Scheme::Unquantized => None,
            })
            .collect()
    }
}

/// Geometry, fading and covariance models without any training.
pub struct Geometry {
    pub layout: NetworkLayout,
    pub fading: LargeScaleFading,
    pub angles: DMatrix<f64>,
    pub models: Vec<Vec<CovarianceModel>>,
    pub rho_p: f64,
}

pub fn build_geometry(cfg: &ExperimentConfig, r: usize) -> Result<Geometry> {
    let seed = cfg.master_seed;
    let path = [r as u64];
    let (l_count, k_count) = (cfg.n_aps(), cfg.users);
    let layout = NetworkLayout::generate(
        l_count,
        k_count,
        cfg.area_side_km,
        cfg.wrap_around,
        &mut stream(seed, Purpose::ApPlacement, &path),
        &mut stream(seed, Purpose::UePlacement, &path),
    )?;
    let params = PathLossParams::new(cfg.d0_km, cfg.d1_km, cfg.carrier_freq_mhz, cfg.h_ap_m, cfg.h_ue_m)?;
    let fading = large_scale_fading(&layout, &params, cfg.sigma_sh_db, cfg.shadow_inside_d1, &mut stream(seed, Purpose::Shadowing, &path));
    let mut angle_rng = stream(seed, Purpose::Angles, &path);
    let angles = DMatrix::from_row_iterator(l_count, k_count, (0..l_count * k_count).map(|_| angle_rng.gen_range(-PI..PI)));
    let spread = cfg.sigma_delta_deg.to_radians();
    let models = (0..l_count)
        .map(|l| {
            (0..k_count)
                .map(|k| {
                    let corr = correlation_matrix(&CorrelationSpec {
                        nominal_angle_rad: angles[(l, k)],
                        angular_spread_std_rad: spread,
                        antenna_spacing: cfg.antenna_spacing,
                        n_antennas: cfg.antennas_per_ap,
                        angular_distribution: cfg.angular_distribution,
                    })?;
                    CovarianceModel::new(corr, fading.beta[(l, k)], cfg.rank_tol)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rho = rho_p(cfg.tx_power_dbw(), noise_power_w(cfg.bandwidth_hz, cfg.noise_figure_db, cfg.noise_temp_k));
    Ok(Geometry { layout, fading, angles, models, rho_p: rho })
}

/// EQ training set of AP `l`: `n_draws` small-scale draws, each giving the
/// β-normalized LMMSE estimates of all users, split into real and imaginary
/// parts.
pub fn eq_training_samples(models: &[CovarianceModel], gains: &[EqGain], tau_rho: f64, n_draws: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    let noise_std = c(1.0 / tau_rho.sqrt(), 0.0);
    let mut out = Vec::with_capacity(2 * n_draws * models.len());
    for _ in 0..n_draws {
        for (model, gain) in models.iter().zip(gains) {
            let g = model.sample(rng);
            let r = g + CVec::from_fn(model.n_antennas(), |_, _| complex_normal(rng)) * noise_std;
            let est = &gain.gamma * r / c(model.beta.sqrt(), 0.0);
            out.push(est.iter().map(|z| z.re).collect());
            out.push(est.iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Received pilot columns at AP `l` over `n_draws` pilot phases, each with a
/// fresh pilot book and channel.
pub fn qe_pilot_columns(cfg: &ExperimentConfig, models: &[CovarianceModel], rho: f64, n_draws: usize, rng: &mut SimRng) -> Result<Vec<CVec>> {
    let pilots = generate_pilots(cfg.tau, cfg.users, cfg.pilot_kind, rng)?;
    let mut cols = Vec::with_capacity(n_draws * cfg.tau);
    for _ in 0..n_draws {
        let g = CMat::from_columns(&models.iter().map(|m| m.sample(rng)).collect::<Vec<_>>());
        let y = receive_pilots(&g, &pilots, rho, true, rng)?;
        cols.extend(y.y.column_iter().map(|col| col.into_owned()));
    }
    Ok(cols)
}

pub fn split_re_im(cols: &[CVec]) -> Vec<Vec<f64>> {
    cols.iter()
        .flat_map(|v| [v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect()])
        .collect()
}

fn rms(samples: &[Vec<f64>]) -> f64 {
    let (sum, n) = samples.iter().flatten().fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n as f64).sqrt()
}

fn vq_codebook(cfg: &ExperimentConfig, samples: &[Vec<f64>], input_scale: f64) -> Result<Codebook> {
    let scaled: Vec<Vec<f64>> = samples.iter().map(|v| v.iter().map(|x| x * input_scale).collect()).collect();
    let size = 1usize << cfg.vector_bits();
    lbg_train(&scaled, size, &cfg.lbg)?.codebook.with_input_scale(input_scale)
}

fn sq_quantizer(cfg: &ExperimentConfig, samples: &[Vec<f64>]) -> Result<PerAntenna> {
    let bits = cfg.bits_per_dim.round() as u32;
    let loading = cfg.loading_factor.unwrap_or_else(|| gaussian_optimal_loading(bits));
    let sigma = rms(samples);
    if !(sigma > 0.0) {
        return Err(Error::numerical("scalar quantizer training samples have zero power"));
    }
    PerAntenna::new(uniform_scalar_codebook(bits, sigma, loading)?, cfg.antennas_per_ap)
}

/// Trains the quantizers and Bussgang models of AP `l`.
pub fn train_ap(cfg: &ExperimentConfig, r: usize, l: usize, models: &[CovarianceModel], gains: &[EqGain], rho: f64) -> Result<ApQuantizers> {
    let seed = cfg.master_seed;
    let path = [r as u64, l as u64];
    let tau_rho = cfg.tau as f64 * rho;
    let mut out = ApQuantizers::default();

    if cfg.has(Scheme::VqEq) || cfg.has(Scheme::SqEq) {
        let samples = eq_training_samples(models, gains, tau_rho, cfg.n_training, &mut stream(seed, Purpose::TrainEq, &path));
        if cfg.has(Scheme::VqEq) {
            out.vq_eq = Some(vq_codebook(cfg, &samples, 1.0)?);
        }
        if cfg.has(Scheme::SqEq) {
            out.sq_eq = Some(sq_quantizer(cfg, &samples)?);
        }
    }

    if cfg.has(Scheme::VqQe) || cfg.has(Scheme::SqQe) {
        let cols = qe_pilot_columns(cfg, models, rho, cfg.n_training, &mut stream(seed, Purpose::TrainQe, &path))?;
        let samples = split_re_im(&cols);
        let fit_cols = match cfg.bussgang_nt {
            Some(n) => qe_pilot_columns(cfg, models, rho, n, &mut stream(seed, Purpose::Bussgang, &path))?,
            None => cols,
        };
        if cfg.has(Scheme::VqQe) {
            let power = rms(&samples);
            if !(power > 0.0) {
                return Err(Error::numerical(format!("AP {l}: pilot training samples have zero power")));
            }
            let cb = vq_codebook(cfg, &samples, 1.0 / power)?;
            let outputs = fit_cols.iter().map(|y| cb.quantize_complex(y)).collect::<Result<Vec<_>>>()?;
            out.bussgang_vq = Some(bussgang_from_pairs(&fit_cols, &outputs)?);
            out.vq_qe = Some(cb);
        }
        if cfg.has(Scheme::SqQe) {
            let q = sq_quantizer(cfg, &samples)?;
            let outputs = fit_cols.iter().map(|y| q.quantize_complex(y)).collect::<Result<Vec<_>>>()?;
            out.bussgang_sq = Some(bussgang_diagonal_from_pairs(&fit_cols, &outputs)?);
            out.sq_qe = Some(q);
        }
    }
    Ok(out)
}

fn qe_gains(models: &[Vec<CovarianceModel>], bussgang: &[&BussgangModel], tau_rho: f64) -> Result<Vec<QeGain>> {
    let k_count = models.first().map(Vec::len).unwrap_or(0);
    (0..k_count)
        .map(|k| {
            let sigmas: Vec<&CMat> = models.iter().map(|row| &row[k].sigma).collect();
            qe_gain(&sigmas, bussgang, tau_rho)
        })
        .collect()
}

/// Builds the full context of realization `r`.
pub fn build_context(cfg: &ExperimentConfig, r: usize) -> Result<LargeScaleContext> {
    let Geometry { layout, fading, angles, models, rho_p } = build_geometry(cfg, r)?;
    let tau_rho = cfg.tau as f64 * rho_p;
    let pilots = generate_pilots(cfg.tau, cfg.users, cfg.pilot_kind, &mut stream(cfg.master_seed, Purpose::Pilots, &[r as u64]))?;
    let eq_gains = models
        .iter()
        .map(|row| row.iter().map(|m| eq_gain(&m.sigma, tau_rho)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let quantizers = (0..models.len())
        .into_par_iter()
        .map(|l| train_ap(cfg, r, l, &models[l], &eq_gains[l], rho_p))
        .collect::<Result<Vec<_>>>()?;

    let collect = |pick: fn(&ApQuantizers) -> Option<&BussgangModel>| -> Result<Option<Vec<QeGain>>> {
        let bg: Option<Vec<&BussgangModel>> = quantizers.iter().map(pick).collect();
        bg.map(|bg| qe_gains(&models, &bg, tau_rho)).transpose()
    };
    let qe_gains_vq = collect(|q| q.bussgang_vq.as_ref())?;
    let qe_gains_sq = collect(|q| q.bussgang_sq.as_ref())?;

    Ok(LargeScaleContext { realization: r, layout, fading, angles, models, rho_p, pilots, eq_gains, quantizers, qe_gains_vq, qe_gains_sq })
}
