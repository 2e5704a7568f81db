//! Orthonormal pilot books and the uplink pilot phase.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::rng::complex_normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotKind {
    /// Orthonormalized complex Gaussian columns.
    #[default]
    Random,
    /// First `K` columns of the unitary `τ`-point DFT matrix.
    Dft,
}

/// `τ×K` matrix of unit-norm, mutually orthogonal pilot sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    pub sequences: CMat,
}

impl PilotBook {
    pub fn tau(&self) -> usize {
        self.sequences.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.sequences.ncols()
    }

    pub fn sequence(&self, k: usize) -> CVec {
        self.sequences.column(k).into_owned()
    }

    /// `Φ = √(τρ_p)·[φ_1 … φ_K]`.
    pub fn scaled(&self, rho_p: f64) -> CMat {
        &self.sequences * c((self.tau() as f64 * rho_p).sqrt(), 0.0)
    }
}

/// Orthonormal pilots for `k` users of length `tau`.
pub fn generate_pilots<R: Rng + ?Sized>(tau: usize, k: usize, kind: PilotKind, rng: &mut R) -> Result<PilotBook> {
    if k == 0 || tau == 0 {
        return Err(Error::invalid("pilots: need at least one user and one symbol"));
    }
    if k > tau {
        return Err(Error::invalid(format!("pilots: {k} users cannot have orthogonal pilots of length {tau}")));
    }
    let sequences = match kind {
        PilotKind::Random => {
            let mut q = CMat::from_fn(tau, k, |_, _| complex_normal(rng));
            // modified Gram–Schmidt, two passes
            for j in 0..k {
                for _ in 0..2 {
                    for i in 0..j {
                        let qi = q.column(i).into_owned();
                        let proj = qi.dotc(&q.column(j));
                        q.column_mut(j).axpy(-proj, &qi, c(1.0, 0.0));
                    }
                }
                let norm = q.column(j).norm();
                if !(norm > 1e-300) {
                    return Err(Error::numerical("pilots: degenerate Gram–Schmidt column"));
                }
                q.column_mut(j).unscale_mut(norm);
            }
            q
        }
        PilotKind::Dft => {
            let scale = 1.0 / (tau as f64).sqrt();
            CMat::from_fn(tau, k, |t, j| Complex64::from_polar(scale, -2.0 * PI * (t * j) as f64 / tau as f64))
        }
    };
    Ok(PilotBook { sequences })
}

/// Pilot observation `Y_l` (N×τ) at one AP.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedPilots {
    pub y: CMat,
    pub rho_p: f64,
}

/// `Y = √(τρ_p)·Σ_k g_k·φ_kᴴ + W` with `W` i.i.d. `CN(0, 1)` (or zero when
/// `noise_enabled` is false).
pub fn receive_pilots<R: Rng + ?Sized>(
    g_l: &CMat,
    pilots: &PilotBook,
    rho_p: f64,
    noise_enabled: bool,
    rng: &mut R,
) -> Result<ReceivedPilots> {
    if g_l.ncols() != pilots.n_users() {
        return Err(Error::invalid(format!(
            "receive_pilots: channel has {} users, pilot book {}",
            g_l.ncols(),
            pilots.n_users()
        )));
    }
    if !(rho_p > 0.0) {
        return Err(Error::invalid(format!("receive_pilots: SNR {rho_p} must be positive")));
    }
    let tau = pilots.tau();
    let mut y = g_l * pilots.sequences.adjoint() * c((tau as f64 * rho_p).sqrt(), 0.0);
    if noise_enabled {
        for v in y.iter_mut() {
            *v += complex_normal(rng);
        }
    }
    Ok(ReceivedPilots { y, rho_p })
}

/// `r = Y·φ_k / √(τρ_p)`.
pub fn project_pilot(y: &CMat, phi_k: &CVec, tau_rho: f64) -> CVec {
    y * phi_k / c(tau_rho.sqrt(), 0.0)
}
