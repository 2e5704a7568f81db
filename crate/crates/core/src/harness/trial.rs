//! One Monte Carlo repetition: a small-scale channel draw, one pilot phase and
//! every enabled scheme evaluated on the same realization.

use std::collections::BTreeMap;

use super::config::ExperimentConfig;
use super::context::LargeScaleContext;
use super::metrics::mse;
use crate::error::{Error, Result};
use crate::estimation::{eq_quantize, estimate_eq, estimate_qe, qe_quantize_pilots, stack, stack_pilots, Scheme};
use crate::linalg::{CMat, CVec};
use crate::pilots::{receive_pilots, ReceivedPilots};
use crate::rng::{derive_seed, stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub config_digest: String,
    /// `‖G − Ĝ‖²_F` per scheme.
    pub squared_error: BTreeMap<Scheme, f64>,
    /// Squared error over `M·K`.
    pub mse: BTreeMap<Scheme, f64>,
}

/// Seed of trial `t` in realization `r`.
pub fn trial_seed(cfg: &ExperimentConfig, r: usize, t: usize) -> u64 {
    derive_seed(cfg.master_seed, Purpose::Trial, &[r as u64, t as u64])
}

/// The channel and pilot observations of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDraw {
    /// Global M×K channel.
    pub g: CMat,
    pub received: Vec<ReceivedPilots>,
}

pub fn draw_trial(ctx: &LargeScaleContext, seed: u64) -> Result<TrialDraw> {
    let mut fading = stream(seed, Purpose::Fading, &[]);
    let mut noise = stream(seed, Purpose::Noise, &[]);
    let blocks: Vec<Vec<CVec>> = ctx.models.iter().map(|row| row.iter().map(|m| m.sample(&mut fading)).collect()).collect();
    let received = blocks
        .iter()
        .map(|row| receive_pilots(&CMat::from_columns(row), &ctx.pilots, ctx.rho_p, true, &mut noise))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialDraw { g: stack(&blocks)?, received })
}

/// Estimate of `scheme` on a given draw.
pub fn estimate(ctx: &LargeScaleContext, draw: &TrialDraw, scheme: Scheme) -> Result<CMat> {
    let missing = || Error::invalid(format!("context was built without {scheme}"));
    match scheme {
        Scheme::Unquantized | Scheme::VqEq | Scheme::SqEq => {
            let est = draw
                .received
                .iter()
                .zip(&ctx.eq_gains)
                .map(|(y, gains)| estimate_eq(y, &ctx.pilots, gains))
                .collect::<Result<Vec<_>>>()?;
            if scheme == Scheme::Unquantized {
                return stack(&est);
            }
            let q = ctx.quantizers_for(scheme).ok_or_else(missing)?;
            Ok(eq_quantize(&est, &q, &ctx.fading.beta, scheme)?.g_hat)
        }
        Scheme::VqQe | Scheme::SqQe => {
            let q = ctx.quantizers_for(scheme).ok_or_else(missing)?;
            let gains = if scheme == Scheme::VqQe { &ctx.qe_gains_vq } else { &ctx.qe_gains_sq };
            let gains = gains.as_ref().ok_or_else(missing)?;
            let yq = draw.received.iter().zip(&q).map(|(y, q)| qe_quantize_pilots(y, *q)).collect::<Result<Vec<_>>>()?;
            Ok(estimate_qe(&stack_pilots(&yq), ctx.rho_p, &ctx.pilots, gains, scheme)?.g_hat)
        }
    }
}

fn annotate(e: Error, seed: u64) -> Error {
    match e {
        Error::Numerical(m) => Error::Numerical(format!("trial seed {seed}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("trial seed {seed}: {m}")),
        other => other,
    }
}

/// Runs every enabled scheme on one shared draw.
pub fn run_trial(cfg: &ExperimentConfig, ctx: &LargeScaleContext, seed: u64) -> Result<TrialResult> {
    let run = || -> Result<TrialResult> {
        let draw = draw_trial(ctx, seed)?;
        let mut squared_error = BTreeMap::new();
        let mut per_entry = BTreeMap::new();
        for scheme in cfg.enabled_schemes() {
            let g_hat = estimate(ctx, &draw, scheme)?;
            let m = mse(&draw.g, &g_hat)?;
            if !m.is_finite() {
                return Err(Error::numerical(format!("{scheme} produced a non-finite error")));
            }
            squared_error.insert(scheme, m * draw.g.len() as f64);
            per_entry.insert(scheme, m);
        }
        Ok(TrialResult { seed, config_digest: cfg.digest(), squared_error, mse: per_entry })
    };
    run().map_err(|e| annotate(e, seed))
}
