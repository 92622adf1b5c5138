//! `sweep`: cross a penalty grid with a subset-size grid.

use std::path::PathBuf;

use clap::Args;
use mmfs::{sweep_gamma, Error, Result, SelectorConfig};
use serde::Serialize;

use crate::args::{DataArgs, ProtocolArgs, SolverArgs};
use crate::grids;
use crate::output::{self, Sink};
use crate::pipeline;
use crate::run_eval;

#[derive(Args, Clone, Debug, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    #[command(flatten)]
    pub protocol: ProtocolArgs,

    /// Penalty values to sweep; `--gamma` is ignored here.
    #[arg(long, default_value = "0.1,0.3,1,3,10")]
    pub gamma_grid: String,

    /// Subset sizes to score at every penalty value.
    #[arg(long, default_value = "small")]
    pub k_grid: String,

    /// Rank once per penalty value on the full dataset instead of per fold.
    #[arg(long, default_value_t = false)]
    pub paper_mode: bool,

    /// Output path stem; the table gets a `.sweep.csv` suffix. Without it
    /// the table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &SweepArgs, seed: u64) -> Result<()> {
    let run_config = output::run_config_value("sweep", seed, args);
    let gamma_grid = grids::parse_gamma_grid(&args.gamma_grid).map_err(Error::InvalidArgument)?;
    let k_grid = grids::parse_k_grid(&args.k_grid).map_err(Error::InvalidArgument)?;

    let dataset = pipeline::load_dataset(&args.data.data, args.data.zero_based)?;
    let norm = args
        .data
        .norm
        .resolve(dataset.n_instances(), dataset.n_stored_columns());
    let selector = SelectorConfig {
        norm,
        solver: args.solver.to_config(seed),
    };
    let protocol = run_eval::build_protocol(&args.protocol, args.data.zero_based, seed)?;

    let sweep = sweep_gamma(
        &dataset,
        &gamma_grid,
        &k_grid,
        &protocol,
        &selector,
        args.protocol.c_clf,
        args.paper_mode,
    )?;

    let mut buf = Vec::new();
    sweep
        .write_csv(&mut buf)
        .expect("writing to memory cannot fail");
    let text = format!(
        "{}{}",
        output::run_config_line(&run_config),
        String::from_utf8(buf).expect("tables are UTF-8")
    );
    Sink::new(&args.out).write(".sweep.csv", &text)?;

    eprintln!(
        "sweep: {} penalty values x {} subset sizes scored",
        gamma_grid.len(),
        k_grid.len(),
    );
    Ok(())
}
