//! Experiment harness: configuration, seeded Monte Carlo runs over all
//! schemes, sweeps, CSV output and closed-form self checks.
//!
//! Random streams are keyed by purpose and index (realization, AP, trial), never
//! by scheme, so every scheme in a trial sees the same channel, pilots and
//! noise, and enabling or disabling a scheme changes nothing else.

pub mod config;
pub mod context;
pub mod experiment;
pub mod metrics;
pub mod trial;
pub mod validate;

pub use config::{ExperimentConfig, PowerUnit};
pub use context::{build_context, LargeScaleContext};
pub use experiment::{csv_string, run_experiment, sweep, write_csv, Axis, ExperimentResult, ResultRow, SchemeStats, SweepResult, CSV_HEADER};
pub use metrics::{mse, noise_power_w, rho_p, Summary};
pub use trial::{run_trial, trial_seed, TrialResult};
pub use validate::{validate, validate_with, Hooks, Report};
