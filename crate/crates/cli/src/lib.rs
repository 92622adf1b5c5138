//! Command-line front end for the margin-based feature selection toolkit.
//!
//! Five subcommands cover the workflow: `gen` writes synthetic datasets,
//! `select` ranks features, `eval` scores subset sizes with a downstream
//! classifier, `sweep` crosses a penalty grid with a size grid, and `bench`
//! times the pipeline phases.
//!
//! Exit codes: 0 success, 1 configuration or I/O problem, 2 input parse
//! error (with a line number), 3 solver hit its sweep budget (results are
//! still written, flagged as such), 4 a capacity limit refused the run.
//!
//! One `--seed` drives every randomized component; per-component seeds are
//! derived from it, so runs with the same flags are bitwise reproducible.

use clap::Parser;
use mmfs::{Error, SolveStatus};

pub mod args;
pub mod grids;
pub mod output;
pub mod pipeline;
pub mod run_bench;
pub mod run_eval;
pub mod run_gen;
pub mod run_select;
pub mod run_sweep;

/// Per-component seed derivation. Each randomized component draws from its
/// own stream so adding one never perturbs another.
pub mod seeds {
    const SOLVER_STREAM: u64 = 1;
    const PROTOCOL_STREAM: u64 = 2;

    /// Seed of the solver's per-sweep visit order.
    pub fn solver_seed(run_seed: u64) -> u64 {
        mmfs::derive_seed(run_seed, SOLVER_STREAM)
    }

    /// Seed of the random train/test partitioner.
    pub fn protocol_seed(run_seed: u64) -> u64 {
        mmfs::derive_seed(run_seed, PROTOCOL_STREAM)
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_UNCONVERGED: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "mmfs",
    version,
    about = "Margin-based feature selection: rank features, score subsets, time the pipeline",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// Seed for every randomized component of the run.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker cap. The pipeline currently runs single-threaded; values
    /// above 1 are accepted and recorded but change nothing.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: u32,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Subcommand, Debug)]
pub enum Command {
    /// Rank features by one solve on the full dataset.
    Select(run_select::SelectArgs),
    /// Score subset sizes with a downstream linear classifier.
    Eval(run_eval::EvalArgs),
    /// Cross a penalty grid with a subset-size grid.
    Sweep(run_sweep::SweepArgs),
    /// Time the pipeline phases on a real or synthetic input.
    Bench(run_bench::BenchArgs),
    /// Write a synthetic dataset with planted structure.
    Gen(run_gen::GenArgs),
}

/// Maps an error to the documented exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_CONFIG,
    }
}

/// Parses `argv` and runs the selected command; returns the process exit
/// code. The first argument is the program name.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            // Help and version go to stdout, diagnostics to stderr.
            let _ = e.print();
            return code;
        }
    };

    if cli.jobs == 0 {
        eprintln!("error: `--jobs` must be at least 1");
        return EXIT_CONFIG;
    }

    let outcome = match &cli.command {
        Command::Select(a) => run_select::run(a, cli.seed),
        Command::Eval(a) => run_eval::run(a, cli.seed),
        Command::Sweep(a) => run_sweep::run(a, cli.seed).map(|()| SolveStatus::Converged),
        Command::Bench(a) => run_bench::run(a, cli.seed).map(|()| SolveStatus::Converged),
        Command::Gen(a) => run_gen::run(a, cli.seed).map(|()| SolveStatus::Converged),
    };

    match outcome {
        Ok(SolveStatus::Converged) => EXIT_OK,
        Ok(SolveStatus::MaxSweeps) => EXIT_UNCONVERGED,
        Ok(SolveStatus::Diverged) => {
            eprintln!("error: the solve diverged; the iterate is unusable");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Entry point for the binary: runs with the process arguments.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}
