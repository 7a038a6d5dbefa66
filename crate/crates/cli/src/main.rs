//! `thermrom`: run the finite-difference oracle, characterize a system into a
//! reduced-order model, predict with the model and compare traces.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermrom_core::Error;

#[derive(Debug, Parser)]
#[command(name = "thermrom", version, about = "Transient thermal reduced-order models")]
struct Cli {
    /// Worker threads for parallel trials (defaults to all cores).
    #[arg(long, env = "THERMROM_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the finite-difference oracle and write probe temperatures as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Simulated time (s).
        #[arg(long)]
        duration: f64,
        /// Grid spacing (m).
        #[arg(long)]
        dx: f64,
        /// Output sampling interval (s).
        #[arg(long)]
        sample_dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run unit-power trials and fit the reduced-order model.
    Characterize {
        #[arg(long)]
        config: PathBuf,
        /// Trial horizon t_m (s).
        #[arg(long, default_value_t = 20.0)]
        tm: f64,
        #[arg(long)]
        dx: f64,
        /// Model JSON output.
        #[arg(long)]
        out: PathBuf,
        /// Fit report JSON [default: <out stem>.report.json].
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for per-trial deviation CSVs [default: next to --out].
        #[arg(long)]
        trials_dir: Option<PathBuf>,
    },
    /// Evaluate a model for a power schedule and write the trace as CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Schedule JSON with one power profile per source id.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        schedule: Option<PathBuf>,
        /// Take the schedule from the bodies of a system config instead.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        sample_dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Error metrics of trace B against reference trace A.
    Compare {
        trace_a: PathBuf,
        trace_b: PathBuf,
        /// Initial temperature used for the rise basis (°C).
        #[arg(long)]
        t0: f64,
        /// Oracle wall-clock time to include in the report (s).
        #[arg(long, requires = "rom_seconds")]
        oracle_seconds: Option<f64>,
        /// ROM wall-clock time to include in the report (s).
        #[arg(long, requires = "oracle_seconds")]
        rom_seconds: Option<f64>,
        /// Report JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the convection coefficient of a single convectively cooled body.
    FitH {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        dx: f64,
        /// Heating power (W) [default: the body's power at t = 0].
        #[arg(long)]
        power: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 for bad input, 3 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if !e.is_config_error() => 3,
        _ => 2,
    }
}
