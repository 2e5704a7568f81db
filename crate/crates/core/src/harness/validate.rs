//! Closed-form self checks.

use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;

use crate::bussgang::bussgang_from_pairs;
use crate::channel::{correlation_matrix, kl_factors, AngularDistribution, CorrelationSpec, CovarianceModel, DEFAULT_RANK_TOL};
use crate::error::Result;
use crate::estimation::{eq_gain, estimate_eq};
use crate::linalg::{c, CMat, CVec};
use crate::pilots::{generate_pilots, receive_pilots, PilotKind};
use crate::quantizer::{lbg_train, LbgOptions};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub deviation: f64,
    pub threshold: f64,
}

impl Check {
    fn new(name: &str, deviation: f64, threshold: f64) -> Self {
        Check { name: name.into(), passed: deviation <= threshold, deviation, threshold }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "pass" } else { "fail" };
        write!(f, "{},{},{:e},{:e}", self.name, status, self.deviation, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name,status,deviation,threshold")?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Fault injection for exercising the checks themselves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Hooks {
    /// Relative error added to the estimated one-bit Bussgang gain.
    pub bussgang_gain_error: f64,
}

pub fn validate() -> Result<Report> {
    validate_with(&Hooks::default())
}

pub fn validate_with(hooks: &Hooks) -> Result<Report> {
    Ok(Report {
        checks: vec![
            one_bit_bussgang(hooks)?,
            scalar_lmmse("scalar_lmmse_tau_rho_1", 1.0)?,
            scalar_lmmse("scalar_lmmse_tau_rho_10", 10.0)?,
            lbg_monotone()?,
            covariance_reconstruction()?,
        ],
    })
}

/// Sign quantizer on `N(0, 1)`: `F = √(2/π)`.
pub fn one_bit_bussgang(hooks: &Hooks) -> Result<Check> {
    let mut rng = stream(0, Purpose::Validation, &[1]);
    let xs: Vec<CVec> = (0..100_000).map(|_| CVec::from_element(1, c(rng.sample(StandardNormal), 0.0))).collect();
    let qs: Vec<CVec> = xs.iter().map(|x| x.map(|z| c(if z.re >= 0.0 { 1.0 } else { -1.0 }, 0.0))).collect();
    let f = bussgang_from_pairs(&xs, &qs)?.gain[(0, 0)].re * (1.0 + hooks.bussgang_gain_error);
    let expect = (2.0 / std::f64::consts::PI).sqrt();
    Ok(Check::new("bussgang_one_bit_gain", (f / expect - 1.0).abs(), 0.02))
}

/// Unquantized scalar LMMSE with `β = 1`: MSE `= 1 − 1/(1 + 1/(τρ))`.
pub fn scalar_lmmse(name: &str, tau_rho: f64) -> Result<Check> {
    let mut rng = stream(0, Purpose::Validation, &[2, tau_rho.to_bits()]);
    let model = CovarianceModel::new(CMat::identity(1, 1), 1.0, DEFAULT_RANK_TOL)?;
    let pilots = generate_pilots(1, 1, PilotKind::Random, &mut rng)?;
    let gains = [eq_gain(&model.sigma, tau_rho)?];
    let trials = 100_000;
    let mut se = 0.0;
    for _ in 0..trials {
        let g = CMat::from_column_slice(1, 1, model.sample(&mut rng).as_slice());
        let y = receive_pilots(&g, &pilots, tau_rho, true, &mut rng)?;
        se += (estimate_eq(&y, &pilots, &gains)?[0][0] - g[(0, 0)]).norm_sqr();
    }
    let expect = 1.0 - 1.0 / (1.0 + 1.0 / tau_rho);
    Ok(Check::new(name, (se / trials as f64 / expect - 1.0).abs(), 0.03))
}

/// Largest relative increase of the LBG training distortion.
pub fn lbg_monotone() -> Result<Check> {
    let mut rng = stream(0, Purpose::Validation, &[3]);
    let samples: Vec<Vec<f64>> = (0..2000).map(|_| (0..2).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let hist = lbg_train(&samples, 16, &LbgOptions::default())?.history;
    let worst = hist.windows(2).map(|w| ((w[1] - w[0]) / w[0]).max(0.0)).fold(0.0, f64::max);
    Ok(Check::new("lbg_distortion_monotone", worst, 0.0))
}

/// `‖U Λ Uᴴ − R‖_F / ‖R‖_F` for a local-scattering correlation.
pub fn covariance_reconstruction() -> Result<Check> {
    let r = correlation_matrix(&CorrelationSpec {
        nominal_angle_rad: 0.3,
        angular_spread_std_rad: 10f64.to_radians(),
        antenna_spacing: 0.5,
        n_antennas: 8,
        angular_distribution: AngularDistribution::Gaussian,
    })?;
    let kl = kl_factors(&r, DEFAULT_RANK_TOL)?;
    let lambda = CMat::from_diagonal(&CVec::from_iterator(kl.eigvals.len(), kl.eigvals.iter().map(|&v| c(v, 0.0))));
    let back = &kl.eigvecs * lambda * kl.eigvecs.adjoint();
    Ok(Check::new("covariance_reconstruction", (back - &r).norm() / r.norm(), 1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_checks_pass() {
        let report = validate().unwrap();
        assert!(report.all_passed(), "{report}");
        let text = report.to_string();
        assert_eq!(text.lines().count(), 6);
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 4);
            assert_eq!(f[1], "pass");
            assert!(f[2].parse::<f64>().unwrap() <= f[3].parse::<f64>().unwrap());
        }
    }

    #[test]
    fn corrupted_gain_fails() {
        let check = one_bit_bussgang(&Hooks { bussgang_gain_error: 0.1 }).unwrap();
        assert!(!check.passed && check.deviation > check.threshold);
        assert!(check.to_string().starts_with("bussgang_one_bit_gain,fail,"));
    }
}
