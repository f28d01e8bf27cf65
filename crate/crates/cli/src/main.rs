//! `pvvlc`: fit PV-module response curves, run single PAM4 links and
//! produce the sweep datasets.
//!
//! Exit status: 0 on success, 1 when a computation fails (the fit does not
//! converge, the data cannot identify the model), 2 on usage, parse or
//! validation errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use config::{GridArgs, KindArg, LinkArgs};

#[derive(Debug, Parser)]
#[command(name = "pvvlc", version, about = "PV-module visible light link simulator")]
struct Cli {
    /// JSON file with defaults for any flag; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the diode parameters to a `lux,volts` CSV and write a model card.
    Fit(FitArgs),
    /// Run one link and print its BER report as a JSON line.
    Simulate(Box<SimulateArgs>),
    /// Write one sweep dataset as CSV.
    Sweep(Box<SweepArgs>),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Calibration samples with header `lux,volts`.
    samples: PathBuf,
    /// Cells in series.
    #[arg(long)]
    cells: Option<u32>,
    /// Module temperature, K.
    #[arg(long)]
    temp: Option<f64>,
    /// Conversion factor used to turn the fitted ratio into I0, A/lux.
    #[arg(long)]
    eta: Option<f64>,
    /// Model card to write.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Model card; the built-in default module if omitted.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[command(flatten)]
    link: LinkArgs,
    /// Payload length, bits.
    #[arg(long)]
    payload_bits: Option<usize>,
    /// Apply receiver post-distortion before slicing.
    #[arg(long)]
    postdist: bool,
    /// Post-distortion gain cap.
    #[arg(long)]
    gain_cap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    kind: KindArg,
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per BER point (median reported).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    payload_bits: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Evaluate grid points one after another.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    gain_cap: Option<f64>,
    #[command(flatten)]
    link: LinkArgs,
    #[command(flatten)]
    grids: GridArgs,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad input or configuration; exit status 2.
    Usage(String),
    /// The computation itself failed; exit status 1.
    Compute(String),
}

impl From<pvvlc_core::Error> for Failure {
    fn from(e: pvvlc_core::Error) -> Self {
        use pvvlc_core::Error as E;
        match e {
            E::Unidentifiable(_) | E::Detection(_) => Failure::Compute(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = config::FileConfig::load(cli.config.as_deref()).and_then(|file| match &cli.command {
        Command::Fit(args) => commands::fit(args, &file),
        Command::Simulate(args) => commands::simulate(args, &file),
        Command::Sweep(args) => commands::sweep(args, &file),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
