//! Experiment runs and parameter sweeps.

use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

use super::config::ExperimentConfig;
use super::context::build_context;
use super::metrics::{paired_difference, summarize, Summary};
use super::trial::{run_trial, trial_seed, TrialResult};
use crate::error::{Error, Result};
use crate::estimation::Scheme;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeStats {
    pub scheme: Scheme,
    /// Per-trial MSE, `samples[r][t]`.
    pub samples: Vec<Vec<f64>>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub schemes: Vec<SchemeStats>,
}

impl ExperimentResult {
    pub fn stats(&self, scheme: Scheme) -> Option<&SchemeStats> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    /// Paired summary of `MSE(a) − MSE(b)` over the shared trials.
    pub fn paired(&self, a: Scheme, b: Scheme) -> Result<Summary> {
        let get = |s| self.stats(s).ok_or_else(|| Error::invalid(format!("{s} was not run")));
        paired_difference(&get(a)?.samples, &get(b)?.samples)
    }
}

/// All trials of realization `r`.
pub fn run_realization(cfg: &ExperimentConfig, r: usize) -> Result<Vec<TrialResult>> {
    let ctx = build_context(cfg, r)?;
    (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &ctx, trial_seed(cfg, r, t))).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let trials: Vec<Vec<TrialResult>> =
        (0..cfg.large_scale_realizations).into_par_iter().map(|r| run_realization(cfg, r)).collect::<Result<_>>()?;
    let schemes = cfg
        .enabled_schemes()
        .into_iter()
        .map(|scheme| {
            let samples: Vec<Vec<f64>> = trials.iter().map(|row| row.iter().map(|t| t.mse[&scheme]).collect()).collect();
            SchemeStats { scheme, summary: summarize(&samples), samples }
        })
        .collect();
    Ok(ExperimentResult { config: cfg.clone(), schemes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    TxPower,
    SigmaDelta,
    AntennasPerAp,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::TxPower => "tx_power",
            Axis::SigmaDelta => "sigma_delta",
            Axis::AntennasPerAp => "antennas_per_ap",
        }
    }

    /// `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut out = cfg.clone();
        match self {
            Axis::TxPower => out.tx_power = value,
            Axis::SigmaDelta => out.sigma_delta_deg = value,
            Axis::AntennasPerAp => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(vec![format!("antennas_per_ap value {value} is not a positive integer")]));
                }
                out.antennas_per_ap = value as usize;
            }
        }
        out.validate().map_err(|e| match e {
            Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{} = {value}: {m}", self.name())).collect()),
            other => other,
        })?;
        Ok(out)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Axis::TxPower, Axis::SigmaDelta, Axis::AntennasPerAp]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub points: Vec<(f64, ExperimentResult)>,
}

/// Runs one experiment per axis value. Every point uses the configured master
/// seed, so points share geometry and small-scale draws wherever their
/// dimensions allow and differences between points are paired.
pub fn sweep(cfg: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Config(vec!["sweep needs at least one value".into()]));
    }
    let configs = values.iter().map(|&v| axis.apply(cfg, v)).collect::<Result<Vec<_>>>()?;
    let points = values
        .iter()
        .zip(&configs)
        .map(|(&v, c)| Ok((v, run_experiment(c)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { axis, points })
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis: String,
    pub axis_value: f64,
    pub scheme: Scheme,
    pub mse_mean: f64,
    pub mse_stderr: f64,
    pub trials: usize,
    pub large_scale_realizations: usize,
    pub bits_per_dim: f64,
    pub n_antennas: usize,
    pub seed: u64,
    pub config_digest: String,
}

pub const CSV_HEADER: [&str; 11] = [
    "axis",
    "axis_value",
    "scheme",
    "mse_mean",
    "mse_stderr",
    "trials",
    "large_scale_realizations",
    "bits_per_dim",
    "n_antennas",
    "seed",
    "config_digest",
];

impl ExperimentResult {
    pub fn rows(&self, axis: &str, axis_value: f64) -> Vec<ResultRow> {
        let c = &self.config;
        let digest = c.digest();
        self.schemes
            .iter()
            .map(|s| ResultRow {
                axis: axis.to_string(),
                axis_value,
                scheme: s.scheme,
                mse_mean: s.summary.mean,
                mse_stderr: s.summary.stderr,
                trials: c.trials,
                large_scale_realizations: c.large_scale_realizations,
                bits_per_dim: c.bits_per_dim,
                n_antennas: c.antennas_per_ap,
                seed: c.master_seed,
                config_digest: digest.clone(),
            })
            .collect()
    }
}

impl SweepResult {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.points.iter().flat_map(|(v, r)| r.rows(self.axis.name(), *v)).collect()
    }
}

/// Writes the header and rows; floats use the shortest round-trip
/// scientific notation.
pub fn write_csv<W: std::io::Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    out.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        out.write_record([
            r.axis.clone(),
            format!("{:e}", r.axis_value),
            r.scheme.name().to_string(),
            format!("{:e}", r.mse_mean),
            format!("{:e}", r.mse_stderr),
            r.trials.to_string(),
            r.large_scale_realizations.to_string(),
            format!("{:e}", r.bits_per_dim),
            r.n_antennas.to_string(),
            r.seed.to_string(),
            r.config_digest.clone(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}
