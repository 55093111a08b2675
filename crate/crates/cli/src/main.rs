//! `switchcal`: generate synthetic series, run and wrap calibrated forecasts,
//! and tabulate results.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "switchcal",
    version,
    about = "Online conformal calibration for regime-switching series"
)]
struct Cli {
    /// Overrides the seed of generated datasets and generator specs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs; 1 runs them sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic series (and regime labels, when known) as CSV.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one or more configured forecasts with calibrated bands.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate point forecasts produced elsewhere.
    Wrap {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a coverage and width comparison table from metrics files.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let exec = commands::execution(cli.jobs)?;
    let run = || match &cli.command {
        Command::Generate { spec, out } => commands::generate(spec, out, cli.seed),
        Command::Run { config, out } => commands::run(config, out.as_deref(), cli.seed, exec),
        Command::Wrap {
            trace,
            series,
            config,
            out,
        } => commands::wrap(trace, series, config, out),
        Command::Report { inputs, out } => commands::report(inputs, out),
    };
    commands::with_jobs(cli.jobs, run)?
}
