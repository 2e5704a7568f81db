//! Few-bit CSI acquisition for centralized cell-free massive MIMO.
//!
//! The crate simulates how access points (APs) with `N` antennas each deliver
//! channel state information to a central processor over a fronthaul link that
//! carries only a few bits per real dimension. Four quantized acquisition
//! schemes are compared against unquantized LMMSE estimation:
//!
//! - `VQ_EQ` / `SQ_EQ`: each AP runs LMMSE estimation locally and sends the
//!   vector- or scalar-quantized estimate.
//! - `VQ_QE` / `SQ_QE`: each AP sends quantized pilot observations and the
//!   central processor estimates the channel with a Bussgang-linearized LMMSE
//!   filter.
//!
//! Module map:
//!
//! - [`topology`]: AP/UE placement on a wrap-around square, three-slope path
//!   loss and log-normal shadowing.
//! - [`channel`]: local-scattering spatial correlation, eigen factors and
//!   correlated Rayleigh draws.
//! - [`quantizer`]: LBG-trained vector codebooks, uniform scalar codebooks and
//!   the binary codebook file format.
//! - [`bussgang`]: sample-based Bussgang gain and distortion covariance.
//! - [`pilots`]: orthonormal pilot books and the uplink pilot phase.
//! - [`estimation`]: the EQ and QE pipelines.
//! - [`harness`]: configuration, seeded Monte Carlo runs, sweeps, CSV output and
//!   the self-check report.

pub mod bussgang;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod pilots;
pub mod quantizer;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
