//! `eval`: score subset sizes with a downstream linear classifier.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use mmfs::eval::{EvalProtocol, SelectionMode, SelectorConfig};
use mmfs::{evaluate, whole_data_ranking, Error, FeatureRanking, Result, SolveStatus};
use serde::Serialize;

use crate::args::{DataArgs, OutFormat, ProtocolArgs, ProtocolChoice, SolverArgs};
use crate::grids;
use crate::output::{self, Sink};
use crate::pipeline;
use crate::seeds;

#[derive(Args, Clone, Debug, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    #[command(flatten)]
    pub protocol: ProtocolArgs,

    /// Subset sizes to score: values, ranges (`2:100`, `20:200:10`), or the
    /// presets `small` and `large`.
    #[arg(long, default_value = "small")]
    pub k_grid: String,

    /// Reuse a ranking written by `select` instead of selecting per fold.
    #[arg(long)]
    pub ranking: Option<PathBuf>,

    /// Rank once on the full dataset before splitting. Optimistic: the
    /// ranking sees the test rows. The default re-selects inside every
    /// training fold.
    #[arg(long, default_value_t = false)]
    pub paper_mode: bool,

    /// Output path stem; the report gets an `.eval.tsv`/`.eval.json`
    /// suffix. Without it the report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Report serialization.
    #[arg(long, value_enum, default_value_t = OutFormat::Tsv)]
    pub format: OutFormat,
}

pub fn build_protocol(args: &ProtocolArgs, zero_based: bool, seed: u64) -> Result<EvalProtocol> {
    match args.protocol {
        ProtocolChoice::Loocv => {
            if args.test_data.is_some() {
                return Err(Error::InvalidArgument(
                    "`--test-data` only applies to `--protocol fixed`".into(),
                ));
            }
            Ok(EvalProtocol::Loocv)
        }
        ProtocolChoice::Random => {
            if args.test_data.is_some() {
                return Err(Error::InvalidArgument(
                    "`--test-data` only applies to `--protocol fixed`".into(),
                ));
            }
            Ok(EvalProtocol::RandomSplits {
                n_repeats: args.repeats,
                test_fraction: args.test_fraction,
                seed: seeds::protocol_seed(seed),
            })
        }
        ProtocolChoice::Fixed => {
            let path = args.test_data.as_ref().ok_or_else(|| {
                Error::InvalidArgument("`--protocol fixed` needs `--test-data`".into())
            })?;
            let test = pipeline::load_dataset(path, zero_based)?;
            Ok(EvalProtocol::FixedSplit(test))
        }
    }
}

/// Loads a ranking file written by `select`, by extension: `.json` is the
/// JSON surface, anything else the TSV one.
pub fn load_ranking(path: &Path) -> Result<FeatureRanking> {
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        let text = std::fs::read_to_string(path).map_err(Error::Io)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::parse(e.line(), format!("bad ranking JSON: {e}")))?;
        FeatureRanking::from_json(&value)
    } else {
        let file = File::open(path).map_err(Error::Io)?;
        FeatureRanking::read_tsv(BufReader::new(file))
    }
}

pub fn run(args: &EvalArgs, seed: u64) -> Result<SolveStatus> {
    if args.ranking.is_some() && args.paper_mode {
        return Err(Error::InvalidArgument(
            "`--ranking` and `--paper-mode` both fix one whole-data ranking; pick one".into(),
        ));
    }
    let run_config = output::run_config_value("eval", seed, args);
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
    let protocol = build_protocol(&args.protocol, args.data.zero_based, seed)?;

    let mut status = SolveStatus::Converged;
    let loaded;
    let computed;
    let selection = if let Some(path) = &args.ranking {
        loaded = load_ranking(path)?;
        SelectionMode::Whole {
            ranking: &loaded,
            norm,
        }
    } else if args.paper_mode {
        let (ranking, solution) = whole_data_ranking(&dataset, &selector)?;
        status = solution.status;
        computed = ranking;
        SelectionMode::Whole {
            ranking: &computed,
            norm,
        }
    } else {
        SelectionMode::PerFold(&selector)
    };

    let report = evaluate(&dataset, selection, &k_grid, &protocol, args.protocol.c_clf)?;

    let text = match args.format {
        OutFormat::Tsv => {
            let mut buf = Vec::new();
            report
                .write_tsv(&mut buf)
                .expect("writing to memory cannot fail");
            format!(
                "{}{}",
                output::run_config_line(&run_config),
                String::from_utf8(buf).expect("reports are UTF-8")
            )
        }
        OutFormat::Json => {
            output::json_text(&output::embed_run_config(report.to_json(), &run_config))
        }
    };

    let sink = Sink::new(&args.out);
    let suffix = match args.format {
        OutFormat::Tsv => ".eval.tsv",
        OutFormat::Json => ".eval.json",
    };
    sink.write(suffix, &text)?;

    let best = report.best();
    eprintln!(
        "eval: best subset size {} with mean accuracy {:.2} (std {:.2}) over {} sizes",
        best.k,
        best.mean_accuracy,
        best.std_accuracy,
        report.rows().len(),
    );
    if status == SolveStatus::MaxSweeps {
        eprintln!("eval: the whole-data solve hit its sweep budget; ranking used as-is but flagged");
    }
    Ok(status)
}
