//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 user error (bad flags, unreadable or malformed
//! inputs), 2 internal error (resource caps, numeric failures).

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ein_core::EinError;

#[derive(Parser)]
#[command(name = "ein", version, about = "Graph classification over exact subgraph isomorphism features")]
struct Cli {
    /// Worker threads for feature computation (training itself is
    /// single-threaded and deterministic).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write model.txt and report.txt.
    Train(TrainArgs),
    /// Predict classes and probabilities for every graph in a dataset (CSV).
    Predict(PredictArgs),
    /// Export the selected-subgraph feature matrix for post-hoc analysis (CSV).
    ExportFeatures(PredictArgs),
    /// Enumerate all patterns of a dataset with support counts.
    Mine(MineArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tud,
    Gspan,
    Gen,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ActivationChoice {
    Sigmoid,
    Leakyrelu,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset path; for --format gen, a generator spec such as
    /// "cycle:100" or "cycle_xor:50" (count per class / per quadrant).
    #[arg(long)]
    pub(crate) data: Option<String>,

    #[arg(long, value_enum)]
    pub(crate) format: Option<Format>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    pub(crate) data: DataArgs,

    #[arg(long)]
    pub(crate) maxpat: Option<usize>,

    #[arg(long)]
    pub(crate) k: Option<usize>,

    #[arg(long, value_enum)]
    pub(crate) activation: Option<ActivationChoice>,

    /// Explicit strictly decreasing lambda values, comma separated.
    #[arg(long, conflicts_with = "auto_path")]
    pub(crate) lambda_values: Option<String>,

    /// Use the automatic lambda schedule (the default).
    #[arg(long)]
    pub(crate) auto_path: bool,

    #[arg(long)]
    pub(crate) seed: Option<u64>,

    /// Sweep maxpat x k x activation and keep the best validation loss.
    #[arg(long)]
    pub(crate) grid: bool,

    /// Output directory for model.txt and report.txt.
    #[arg(long)]
    pub(crate) out: Option<String>,

    #[arg(long)]
    pub(crate) node_cap: Option<usize>,

    /// Also fully enumerate the candidate set to report pruning rates.
    #[arg(long)]
    pub(crate) count_all: bool,

    /// key=value file supplying defaults for any of the above.
    #[arg(long)]
    pub(crate) config: Option<String>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `ein train`.
    #[arg(long)]
    pub(crate) model: String,

    #[command(flatten)]
    pub(crate) data: DataArgs,

    #[arg(long)]
    pub(crate) seed: Option<u64>,

    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    pub(crate) out: Option<String>,

    #[arg(long)]
    pub(crate) config: Option<String>,
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    pub(crate) data: DataArgs,

    #[arg(long)]
    pub(crate) maxpat: Option<usize>,

    #[arg(long)]
    pub(crate) seed: Option<u64>,

    #[arg(long)]
    pub(crate) node_cap: Option<usize>,

    /// Output path (stdout when omitted).
    #[arg(long)]
    pub(crate) out: Option<String>,

    #[arg(long)]
    pub(crate) config: Option<String>,
}

fn exit_code_for(err: &EinError) -> u8 {
    match err {
        EinError::NodeCap { .. }
        | EinError::Numeric { .. }
        | EinError::NonFinite(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if cli.threads > 1 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: could not build thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Predict(args) => commands::predict(args, false),
        Command::ExportFeatures(args) => commands::predict(args, true),
        Command::Mine(args) => commands::mine(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
