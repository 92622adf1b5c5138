//! `select`: rank every feature of a dataset by one solve on the full data.

use std::path::PathBuf;

use clap::Args;
use mmfs::{Result, SolveStatus};
use serde::Serialize;

use crate::args::{DataArgs, KernelChoice, OutFormat, SolverArgs, SolverChoice};
use crate::output::{self, Sink};
use crate::pipeline;

#[derive(Args, Clone, Debug, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Which solver path ranks the features.
    #[arg(long = "solver", value_enum, default_value_t = SolverChoice::Dcd)]
    pub solver_path: SolverChoice,

    /// Column similarity used by the constrained path.
    #[arg(long, value_enum, default_value_t = KernelChoice::Linear)]
    pub kernel: KernelChoice,

    /// Bandwidth of the gaussian kernel.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Write only the first K ranked features.
    #[arg(long)]
    pub top_k: Option<usize>,

    /// Output path stem; artifacts get `.ranking.tsv`/`.ranking.json` and
    /// `.solution.json` suffixes. Without it the ranking goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Ranking serialization.
    #[arg(long, value_enum, default_value_t = OutFormat::Tsv)]
    pub format: OutFormat,
}

/// Runs the command; returns the solve status so the caller can map a
/// non-converged (but still written) result to its own exit code.
pub fn run(args: &SelectArgs, seed: u64) -> Result<SolveStatus> {
    let run_config = output::run_config_value("select", seed, args);

    let dataset = pipeline::load_dataset(&args.data.data, args.data.zero_based)?;
    let norm = args
        .data
        .norm
        .resolve(dataset.n_instances(), dataset.n_stored_columns());
    let solver = args.solver.to_config(seed);
    let outcome = pipeline::run_selection(
        &dataset,
        norm,
        solver,
        args.solver_path,
        args.kernel,
        args.sigma,
    )?;
    if outcome.solution.status == SolveStatus::Diverged {
        return Err(mmfs::Error::State(
            "the solve diverged; no artifacts written".into(),
        ));
    }

    let ranking_text = match args.format {
        OutFormat::Tsv => {
            let mut buf = Vec::new();
            outcome
                .ranking
                .write_tsv(&mut buf)
                .expect("writing to memory cannot fail");
            let body = String::from_utf8(buf).expect("rankings are UTF-8");
            let body = match args.top_k {
                Some(k) => truncate_tsv(&body, k),
                None => body,
            };
            format!("{}{body}", output::run_config_line(&run_config))
        }
        OutFormat::Json => {
            let mut value = outcome.ranking.to_json();
            if let Some(k) = args.top_k {
                if let Some(entries) = value["entries"].as_array_mut() {
                    entries.truncate(k);
                }
            }
            output::json_text(&output::embed_run_config(value, &run_config))
        }
    };

    let solution_value = output::embed_run_config(
        outcome.solution.to_json(&outcome.solver_echo, false),
        &run_config,
    );

    let sink = Sink::new(&args.out);
    let ranking_suffix = match args.format {
        OutFormat::Tsv => ".ranking.tsv",
        OutFormat::Json => ".ranking.json",
    };
    sink.write(ranking_suffix, &ranking_text)?;
    if let Some(path) = sink.side_path(".solution.json") {
        output::write_file(&path, &output::json_text(&solution_value))?;
    }

    let sol = &outcome.solution;
    eprintln!(
        "select: {} features ranked, {} active weights, status {}, {} sweeps, violation {:.3e}",
        outcome.ranking.entries().len(),
        sol.n_active(),
        sol.status,
        sol.sweeps_used,
        sol.max_pg_violation,
    );
    if sol.status == SolveStatus::MaxSweeps {
        eprintln!(
            "select: sweep budget exhausted before the tolerance was met; results are usable but flagged"
        );
    }
    Ok(sol.status)
}

/// Keeps every header line and the first `k` data rows.
fn truncate_tsv(body: &str, k: usize) -> String {
    let mut out = String::with_capacity(body.len());
    let mut kept = 0usize;
    for line in body.lines() {
        if line.starts_with('#') {
            out.push_str(line);
            out.push('\n');
        } else if kept < k {
            out.push_str(line);
            out.push('\n');
            kept += 1;
        } else {
            break;
        }
    }
    out
}
