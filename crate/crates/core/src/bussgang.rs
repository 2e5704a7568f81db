//! Sample-based Bussgang linearization of a quantizer.
//!
//! A quantizer output is written as `x_q = F·x + d` with `d` uncorrelated with
//! `x`. `F` is the linear regression of `x_q` on `x` and `C_dd` the residual
//! covariance, both estimated from paired input/output samples.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, clamp_psd, hermitian_part, right_solve_hpd, trace_re, CMat, CVec};

#[derive(Debug, Clone, PartialEq)]
pub struct BussgangModel {
    pub gain: CMat,
    pub distortion_cov: CMat,
    pub n_samples: usize,
}

impl BussgangModel {
    /// `F = I`, `C_dd = 0`: the model of an ideal (unquantized) link.
    pub fn identity(n: usize) -> Self {
        BussgangModel { gain: CMat::identity(n, n), distortion_cov: CMat::zeros(n, n), n_samples: 0 }
    }
}

/// `(1/N_t)·Σ a[n]·b[n]ᴴ`.
pub fn sample_covariance(a: &[CVec], b: &[CVec]) -> Result<CMat> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::invalid(format!("sample_covariance: need equal non-zero counts (got {} and {})", a.len(), b.len())));
    }
    let (ra, rb) = (a[0].len(), b[0].len());
    if a.iter().any(|v| v.len() != ra) || b.iter().any(|v| v.len() != rb) {
        return Err(Error::invalid("sample_covariance: ragged samples"));
    }
    let mut acc = CMat::zeros(ra, rb);
    for (x, y) in a.iter().zip(b) {
        acc.gerc(c(1.0, 0.0), x, y, c(1.0, 0.0));
    }
    Ok(acc / c(a.len() as f64, 0.0))
}

/// Bussgang model from paired samples `outputs[n] = Q(inputs[n])`.
pub fn bussgang_from_pairs(inputs: &[CVec], outputs: &[CVec]) -> Result<BussgangModel> {
    let cxx = sample_covariance(inputs, inputs)?;
    let cqx = sample_covariance(outputs, inputs)?;
    let cqq = sample_covariance(outputs, outputs)?;
    let n = cxx.nrows();
    let gain = match right_solve_hpd(&cqx, &cxx) {
        Some(f) => f,
        None => {
            let eps = 1e-12 * trace_re(&cxx) / n as f64;
            let reg = &cxx + CMat::identity(n, n) * c(eps, 0.0);
            right_solve_hpd(&cqx, &reg).ok_or_else(|| {
                Error::numerical(format!(
                    "Bussgang: input covariance singular even after regularization (trace {:.3e}, {} samples)",
                    trace_re(&cxx),
                    inputs.len()
                ))
            })?
        }
    };
    // C_dd = C_qq − F·C_xq with C_xq = C_qxᴴ
    let cdd = clamp_psd(&hermitian_part(&(cqq - &gain * cqx.adjoint())));
    if gain.iter().chain(cdd.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numerical("Bussgang: non-finite gain or distortion covariance"));
    }
    Ok(BussgangModel { gain, distortion_cov: cdd, n_samples: inputs.len() })
}

/// Bussgang model of `quantizer` estimated on `inputs`.
pub fn estimate_bussgang<F>(inputs: &[CVec], quantizer: F) -> Result<BussgangModel>
where
    F: Fn(&CVec) -> Result<CVec>,
{
    let outputs = inputs.iter().map(&quantizer).collect::<Result<Vec<_>>>()?;
    bussgang_from_pairs(inputs, &outputs)
}

/// Per-antenna Bussgang model: every antenna is linearized on its own, giving
/// diagonal `F` and diagonal `C_dd`.
pub fn bussgang_diagonal_from_pairs(inputs: &[CVec], outputs: &[CVec]) -> Result<BussgangModel> {
    if inputs.is_empty() || inputs.len() != outputs.len() {
        return Err(Error::invalid("Bussgang: need equal non-zero sample counts"));
    }
    let n = inputs[0].len();
    let nt = inputs.len() as f64;
    let mut gain = CMat::zeros(n, n);
    let mut cdd = CMat::zeros(n, n);
    for a in 0..n {
        let (mut cxx, mut cqq) = (0.0, 0.0);
        let mut cqx = Complex64::new(0.0, 0.0);
        for (x, q) in inputs.iter().zip(outputs) {
            cxx += x[a].norm_sqr();
            cqq += q[a].norm_sqr();
            cqx += q[a] * x[a].conj();
        }
        let (cxx, cqq, cqx) = (cxx / nt, cqq / nt, cqx / nt);
        if !(cxx > 0.0) {
            return Err(Error::numerical(format!("Bussgang: antenna {a} has zero input power")));
        }
        gain[(a, a)] = cqx / cxx;
        cdd[(a, a)] = c((cqq - cqx.norm_sqr() / cxx).max(0.0), 0.0);
    }
    Ok(BussgangModel { gain, distortion_cov: cdd, n_samples: inputs.len() })
}

/// Largest imaginary part of `F`, relative to its largest entry. Circularly
/// symmetric inputs give a real gain up to sampling error.
pub fn gain_imaginary_ratio(model: &BussgangModel) -> f64 {
    let max_abs = model.gain.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_im = model.gain.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_abs == 0.0 {
        0.0
    } else {
        max_im / max_abs
    }
}
