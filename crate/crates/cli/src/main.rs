use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use csi_core::harness::context::{build_context, build_geometry};
use csi_core::harness::{run_experiment, sweep, validate, write_csv, Axis, ExperimentConfig, ResultRow};
use csi_core::{estimation::Scheme, Error, Result};

#[derive(Parser)]
#[command(name = "csi-sim", version, about = "Few-bit fronthaul CSI acquisition simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment point.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment per value of a parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one AP's vector codebook and write it to a file.
    TrainCodebook {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Qe)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        ap: usize,
        #[arg(long, default_value_t = 0)]
        realization: usize,
    },
    /// Run the closed-form self checks.
    Validate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Eq,
    Qe,
}

fn write_rows(rows: &[ResultRow], out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_csv(std::fs::File::create(path)?, rows),
        None => write_csv(std::io::stdout().lock(), rows),
    }
}

fn train_codebook(cfg: ExperimentConfig, out: &PathBuf, kind: Kind, ap: usize, realization: usize) -> Result<()> {
    let scheme = match kind {
        Kind::Eq => Scheme::VqEq,
        Kind::Qe => Scheme::VqQe,
    };
    let cfg = ExperimentConfig { schemes: vec![scheme], ..cfg };
    cfg.validate()?;
    let n_aps = build_geometry(&cfg, realization)?.models.len();
    if ap >= n_aps {
        return Err(Error::Config(vec![format!("ap {ap} out of range (the layout has {n_aps} APs)")]));
    }
    let ctx = build_context(&cfg, realization)?;
    let q = &ctx.quantizers[ap];
    let cb = match kind {
        Kind::Eq => q.vq_eq.as_ref(),
        Kind::Qe => q.vq_qe.as_ref(),
    }
    .expect("codebook trained for the selected scheme");
    cb.save(out)?;
    eprintln!(
        "wrote {} points of dimension {} ({} bits/dim, {} Lloyd iterations, final distortion {:e})",
        cb.size(),
        cb.dim(),
        cb.bits_per_dim(),
        cb.training_meta.iterations,
        cb.training_meta.final_distortion
    );
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let res = run_experiment(&cfg)?;
            write_rows(&res.rows("none", 0.0), out.as_ref())?;
        }
        Command::Sweep { config, axis, values, out } => {
            let cfg = ExperimentConfig::load(config)?;
            let axis: Axis = axis.parse().map_err(|e: Error| Error::Config(vec![e.to_string()]))?;
            write_rows(&sweep(&cfg, axis, &values)?.rows(), Some(&out))?;
        }
        Command::TrainCodebook { config, out, kind, ap, realization } => {
            train_codebook(ExperimentConfig::load(config)?, &out, kind, ap, realization)?;
        }
        Command::Validate => {
            let report = validate()?;
            print!("{report}");
            std::io::stdout().flush()?;
            return Ok(report.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
