//! Command-line entry point: every experiment and report as a reproducible,
//! seeded subcommand emitting CSV/JSON artifacts.
//!
//! Values resolve flag → config file → built-in default; every run writes
//! `resolved_config.json` recording the parameters that shaped its outputs.
//! Fixed seed and config give byte-identical artifacts.

mod config;
mod curves;
mod error;
mod mnist;
mod perf_cmd;
mod util;
mod xor;

use clap::{Parser, Subcommand};
use config::FileConfig;
use error::CliError;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "photonn",
    version,
    about = "Optical neural network training experiments and hardware reports"
)]
struct Cli {
    /// RNG seed for parameter initialization and batch shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory artifacts are written into (default `runs/<subcommand>`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML config file; flags override file values, which override
    /// defaults. Sections are named after subcommands, e.g. `[train-xor]`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Train the parity task (single run or gain/bias sweep).
    TrainXor(xor::TrainXorArgs),
    /// Train the digit classifier on Fourier-feature inputs.
    TrainMnist(mnist::TrainMnistArgs),
    /// Tabulate the activation response on a normalized amplitude grid.
    ActivationCurve(curves::ActivationCurveArgs),
    /// Tabulate hardware figures of merit over mesh sizes and depths.
    PerfTable(perf_cmd::PerfTableArgs),
    /// Find gain/V_π contours of constant activation threshold power.
    ThresholdContour(curves::ThresholdContourArgs),
    /// Compare the electro-optic nonlinear parameter against the Kerr effect.
    KerrCompare(curves::KerrCompareArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::TrainXor(_) => "train-xor",
            Cmd::TrainMnist(_) => "train-mnist",
            Cmd::ActivationCurve(_) => "activation-curve",
            Cmd::PerfTable(_) => "perf-table",
            Cmd::ThresholdContour(_) => "threshold-contour",
            Cmd::KerrCompare(_) => "kerr-compare",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = match cli.seed {
        Some(s) => s,
        None => file.root_seed()?.unwrap_or(0),
    };
    let out_dir = match cli.out_dir {
        Some(d) => d,
        None => {
            let base = file.root_out_dir()?.unwrap_or_else(|| "runs".into());
            PathBuf::from(base).join(cli.cmd.name())
        }
    };
    match &cli.cmd {
        Cmd::TrainXor(args) => xor::run(args, &file, seed, &out_dir),
        Cmd::TrainMnist(args) => mnist::run(args, &file, seed, &out_dir),
        Cmd::ActivationCurve(args) => curves::run_curve(args, &file, &out_dir),
        Cmd::PerfTable(args) => perf_cmd::run(args, &file, &out_dir),
        Cmd::ThresholdContour(args) => curves::run_contour(args, &file, &out_dir),
        Cmd::KerrCompare(args) => curves::run_kerr(args, &file, &out_dir),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
