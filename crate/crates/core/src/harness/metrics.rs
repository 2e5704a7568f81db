//! Noise model, SNR and error statistics.

use crate::error::{Error, Result};
use crate::linalg::CMat;

pub const BOLTZMANN: f64 = 1.381e-23;

/// Thermal noise power `B·k_b·T₀·10^(NF/10)` in watts.
pub fn noise_power_w(bandwidth_hz: f64, noise_figure_db: f64, noise_temp_k: f64) -> f64 {
    bandwidth_hz * BOLTZMANN * noise_temp_k * 10f64.powf(noise_figure_db / 10.0)
}

/// Normalized pilot SNR: transmit power over noise power.
pub fn rho_p(tx_power_dbw: f64, noise_power_w: f64) -> f64 {
    10f64.powf(tx_power_dbw / 10.0) / noise_power_w
}

/// `‖G − Ĝ‖²_F / (M·K)`.
pub fn mse(g: &CMat, g_hat: &CMat) -> Result<f64> {
    if g.shape() != g_hat.shape() {
        return Err(Error::invalid(format!("mse: shapes {:?} and {:?} differ", g.shape(), g_hat.shape())));
    }
    Ok((g - g_hat).norm_squared() / g.len() as f64)
}

/// Mean and standard error of a set of per-trial values grouped by
/// large-scale realization.
///
/// With two or more realizations the standard error is taken over the
/// realization means, since trials sharing a realization are correlated.
/// With one realization it is taken over the trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn summarize(groups: &[Vec<f64>]) -> Summary {
    let count: usize = groups.iter().map(Vec::len).sum();
    let total: f64 = groups.iter().flatten().sum();
    let mean = if count == 0 { f64::NAN } else { total / count as f64 };
    let stderr = if groups.len() >= 2 {
        let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
        standard_error(&means)
    } else {
        groups.first().map(|g| standard_error(g)).unwrap_or(f64::NAN)
    };
    Summary { mean, stderr, count }
}

/// Summary of the paired differences `a − b`; both inputs must share the
/// same grouping.
pub fn paired_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Summary> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
        return Err(Error::invalid("paired_difference: sample layouts differ"));
    }
    let diff: Vec<Vec<f64>> = a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect();
    Ok(summarize(&diff))
}

fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::rng::{complex_normal, stream, Purpose};
    use proptest::prelude::*;

    #[test]
    fn noise_power_examples() {
        let p = noise_power_w(20e6, 9.0, 290.0);
        let direct = 20e6 * 1.381e-23 * 290.0 * 10f64.powf(0.9);
        assert!((p - direct).abs() < 1e-25);
        assert!((p - 6.36e-13).abs() < 0.01e-13);
        assert_eq!(noise_power_w(1e6, 0.0, 290.0), 1e6 * BOLTZMANN * 290.0);
        assert!((noise_power_w(40e6, 9.0, 290.0) - 2.0 * p).abs() < 1e-25);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_p(0.0, 1.0), 1.0);
        let r = rho_p(-20.0, noise_power_w(20e6, 9.0, 290.0));
        assert!((r / 1.57e10 - 1.0).abs() < 0.005, "{r}");
        assert!((rho_p(-10.0, 3.0) / rho_p(-20.0, 3.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mse_examples() {
        let g = CMat::from_element(1, 1, c(1.0, 0.0));
        assert_eq!(mse(&g, &g).unwrap(), 0.0);
        assert_eq!(mse(&g, &CMat::from_element(1, 1, c(0.5, 0.0))).unwrap(), 0.25);
        assert!(mse(&g, &CMat::zeros(2, 1)).is_err());

        let mut rng = stream(1, Purpose::Validation, &[]);
        let a = CMat::from_fn(3, 4, |_, _| complex_normal(&mut rng));
        let b = CMat::from_fn(3, 4, |_, _| complex_normal(&mut rng));
        let mut sum = 0.0;
        for i in 0..3 {
            for j in 0..4 {
                let d = a[(i, j)] - b[(i, j)];
                sum += d.re * d.re + d.im * d.im;
            }
        }
        assert!((mse(&a, &b).unwrap() - sum / 12.0).abs() < 1e-14);
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[vec![1.0, 2.0, 3.0]]);
        assert_eq!(s.mean, 2.0);
        assert!((s.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let s = summarize(&[vec![1.0, 1.0], vec![3.0, 3.0]]);
        assert_eq!(s.mean, 2.0);
        assert!((s.stderr - 1.0).abs() < 1e-15);
        let d = paired_difference(&[vec![2.0, 4.0]], &[vec![1.0, 1.0]]).unwrap();
        assert_eq!(d.mean, 2.0);
        assert!(paired_difference(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn mse_is_non_negative(v in proptest::collection::vec(-1e3..1e3f64, 8)) {
            let a = CMat::from_fn(2, 2, |i, j| c(v[i * 2 + j], v[4 + i * 2 + j]));
            let m = mse(&a, &CMat::zeros(2, 2)).unwrap();
            prop_assert!(m >= 0.0 && m.is_finite());
        }
    }
}
