//! Experiment configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::channel::{AngularDistribution, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::estimation::Scheme;
use crate::pilots::PilotKind;
use crate::quantizer::LbgOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PowerUnit {
    #[default]
    #[serde(rename = "dBW")]
    DbW,
    #[serde(rename = "dBm")]
    DbM,
}

impl PowerUnit {
    pub fn to_dbw(self, value: f64) -> f64 {
        match self {
            PowerUnit::DbW => value,
            PowerUnit::DbM => value - 30.0,
        }
    }
}

/// One simulation point. Every field has a default, so a config file only
/// lists what it changes. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Total antennas `M`.
    pub total_antennas: usize,
    /// Antennas per AP `N`; there are `L = M / N` APs.
    pub antennas_per_ap: usize,
    pub users: usize,
    pub tau: usize,
    /// Fronthaul bits per real dimension; a VQ codebook has `2^(b·N)` points.
    pub bits_per_dim: f64,
    pub sigma_delta_deg: f64,
    pub angular_distribution: AngularDistribution,
    /// Antenna spacing in wavelengths.
    pub antenna_spacing: f64,
    #[serde(alias = "tx_power_dbw")]
    pub tx_power: f64,
    pub power_unit: PowerUnit,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub noise_temp_k: f64,
    pub sigma_sh_db: f64,
    pub shadow_inside_d1: bool,
    pub area_side_km: f64,
    pub wrap_around: bool,
    pub d0_km: f64,
    pub d1_km: f64,
    pub carrier_freq_mhz: f64,
    pub h_ap_m: f64,
    pub h_ue_m: f64,
    /// Small-scale realizations drawn per AP for codebook training.
    pub n_training: usize,
    /// Extra samples for the Bussgang fit; `None` reuses the training set.
    pub bussgang_nt: Option<usize>,
    /// Scalar quantizer loading `γ`; `None` picks the Gaussian optimum.
    pub loading_factor: Option<f64>,
    pub lbg: LbgOptions,
    pub rank_tol: f64,
    pub pilot_kind: PilotKind,
    pub trials: usize,
    pub large_scale_realizations: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            total_antennas: 120,
            antennas_per_ap: 4,
            users: 20,
            tau: 20,
            bits_per_dim: 2.0,
            sigma_delta_deg: 10.0,
            angular_distribution: AngularDistribution::Gaussian,
            antenna_spacing: 0.5,
            tx_power: -20.0,
            power_unit: PowerUnit::DbW,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            noise_temp_k: 290.0,
            sigma_sh_db: 8.0,
            shadow_inside_d1: true,
            area_side_km: 1.0,
            wrap_around: true,
            d0_km: 0.01,
            d1_km: 0.05,
            carrier_freq_mhz: 1900.0,
            h_ap_m: 15.0,
            h_ue_m: 1.65,
            n_training: 100,
            bussgang_nt: None,
            loading_factor: None,
            lbg: LbgOptions::default(),
            rank_tol: DEFAULT_RANK_TOL,
            pilot_kind: PilotKind::Random,
            trials: 20,
            large_scale_realizations: 50,
            master_seed: 1,
            schemes: Scheme::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn n_aps(&self) -> usize {
        self.total_antennas / self.antennas_per_ap
    }

    /// Bits per quantized vector, `C = b·N`.
    pub fn vector_bits(&self) -> u32 {
        (self.bits_per_dim * self.antennas_per_ap as f64).round() as u32
    }

    pub fn tx_power_dbw(&self) -> f64 {
        self.power_unit.to_dbw(self.tx_power)
    }

    pub fn has(&self, scheme: Scheme) -> bool {
        self.schemes.contains(&scheme)
    }

    /// Enabled schemes in canonical order.
    pub fn enabled_schemes(&self) -> Vec<Scheme> {
        Scheme::ALL.into_iter().filter(|s| self.has(*s)).collect()
    }

    /// Every violated constraint, or `Ok` when there are none.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let positive = |name: &str, x: f64, v: &mut Vec<String>| {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("{name} must be positive and finite (got {x})"));
            }
        };
        if self.total_antennas == 0 {
            v.push("total_antennas must be at least 1".into());
        }
        if self.antennas_per_ap == 0 {
            v.push("antennas_per_ap must be at least 1".into());
        } else if self.total_antennas % self.antennas_per_ap != 0 {
            v.push(format!(
                "total_antennas ({}) must be a multiple of antennas_per_ap ({})",
                self.total_antennas, self.antennas_per_ap
            ));
        }
        if self.users == 0 {
            v.push("users must be at least 1".into());
        }
        if self.users > self.tau {
            v.push(format!("users ({}) must not exceed tau ({})", self.users, self.tau));
        }
        if self.trials == 0 {
            v.push("trials must be at least 1".into());
        }
        if self.large_scale_realizations == 0 {
            v.push("large_scale_realizations must be at least 1".into());
        }
        if self.n_training == 0 {
            v.push("n_training must be at least 1".into());
        }
        let c = self.bits_per_dim * self.antennas_per_ap as f64;
        if !(c >= 1.0 && (c - c.round()).abs() < 1e-9) {
            v.push(format!("bits_per_dim × antennas_per_ap must be an integer ≥ 1 (got {c})"));
        } else if c.round() > 24.0 {
            v.push(format!("codebook of 2^{} points is too large", c.round()));
        }
        let scalar = self.schemes.iter().any(|s| s.is_scalar());
        if scalar && !(self.bits_per_dim >= 1.0 && self.bits_per_dim.fract() == 0.0) {
            v.push(format!("scalar baselines need an integer bits_per_dim (got {})", self.bits_per_dim));
        }
        if (c - c.round()).abs() < 1e-9 && c >= 1.0 && c.round() <= 24.0 {
            let size = 1usize << (c.round() as u32);
            if self.has(Scheme::VqEq) && 2 * self.n_training * self.users < size {
                v.push(format!(
                    "VQ_EQ training yields {} vectors, fewer than the {size} codebook points",
                    2 * self.n_training * self.users
                ));
            }
            if self.has(Scheme::VqQe) && 2 * self.n_training * self.tau < size {
                v.push(format!(
                    "VQ_QE training yields {} vectors, fewer than the {size} codebook points",
                    2 * self.n_training * self.tau
                ));
            }
        }
        if !(self.sigma_delta_deg >= 0.0 && self.sigma_delta_deg.is_finite()) {
            v.push(format!("sigma_delta_deg must be non-negative (got {})", self.sigma_delta_deg));
        }
        if !self.tx_power.is_finite() {
            v.push("tx_power must be finite".into());
        }
        positive("antenna_spacing", self.antenna_spacing, &mut v);
        positive("bandwidth_hz", self.bandwidth_hz, &mut v);
        positive("noise_temp_k", self.noise_temp_k, &mut v);
        positive("area_side_km", self.area_side_km, &mut v);
        positive("carrier_freq_mhz", self.carrier_freq_mhz, &mut v);
        positive("h_ap_m", self.h_ap_m, &mut v);
        positive("h_ue_m", self.h_ue_m, &mut v);
        positive("d0_km", self.d0_km, &mut v);
        if !self.noise_figure_db.is_finite() {
            v.push("noise_figure_db must be finite".into());
        }
        if !(self.sigma_sh_db >= 0.0 && self.sigma_sh_db.is_finite()) {
            v.push(format!("sigma_sh_db must be non-negative (got {})", self.sigma_sh_db));
        }
        if !(self.d1_km > self.d0_km) {
            v.push(format!("d1_km ({}) must exceed d0_km ({})", self.d1_km, self.d0_km));
        }
        if let Some(g) = self.loading_factor {
            positive("loading_factor", g, &mut v);
        }
        if self.bussgang_nt == Some(0) {
            v.push("bussgang_nt must be at least 1 when set".into());
        }
        if !(self.rank_tol >= 0.0) {
            v.push("rank_tol must be non-negative".into());
        }
        if self.lbg.max_iters == 0 || !(self.lbg.split_epsilon > 0.0) || !(self.lbg.rel_tol >= 0.0) {
            v.push("lbg options need max_iters ≥ 1, split_epsilon > 0 and rel_tol ≥ 0".into());
        }
        if self.schemes.is_empty() {
            v.push("at least one scheme must be enabled".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Compact JSON with fields in declaration order.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.schemes = self.enabled_schemes();
        serde_json::to_string(&c).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_json`].
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_json().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.n_aps(), 30);
        assert_eq!(c.vector_bits(), 8);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"users": 4, "bogus": 1}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"tx_power_dbw": -30, "schemes": ["VQ_QE", "SQ_QE"]}"#).unwrap();
        assert_eq!(c.tx_power, -30.0);
        assert_eq!(c.enabled_schemes(), vec![Scheme::VqQe, Scheme::SqQe]);
    }

    #[test]
    fn validation_lists_every_violation() {
        let c = ExperimentConfig { total_antennas: 10, antennas_per_ap: 4, users: 30, trials: 0, ..Default::default() };
        match c.validate() {
            Err(Error::Config(v)) => {
                assert!(v.len() >= 3, "{v:?}");
                assert!(v.iter().any(|m| m.contains("multiple")));
                assert!(v.iter().any(|m| m.contains("tau")));
                assert!(v.iter().any(|m| m.contains("trials")));
            }
            other => panic!("{other:?}"),
        }
        let c = ExperimentConfig { bits_per_dim: 0.3, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { bits_per_dim: 0.5, schemes: vec![Scheme::VqQe], ..Default::default() };
        c.validate().unwrap();
        let c = ExperimentConfig { bits_per_dim: 0.5, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn digest_tracks_content_not_scheme_order() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.schemes.reverse();
        assert_eq!(a.digest(), b.digest());
        b.trials += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }

    #[test]
    fn power_units() {
        assert_eq!(PowerUnit::DbM.to_dbw(10.0), -20.0);
        let c = ExperimentConfig::from_json(r#"{"tx_power": 10, "power_unit": "dBm"}"#).unwrap();
        assert_eq!(c.tx_power_dbw(), -20.0);
    }
}
