//! `bench`: coarse wall-clock timing of the pipeline phases.
//!
//! One process, one measurement per phase — for statistically careful
//! numbers use the criterion benchmarks; this command exists to compare
//! scaling regimes and solver paths quickly and to expose the sweep counts,
//! which are deterministic even when the timings are not.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use mmfs::{
    correlation_relevance, generate, mmfs_dcd, rank_features, scale_relevance, Error, RankOptions,
    Result, SolverConfig, SparseDataset, SynthConfig,
};
use serde::Serialize;

use clap::ValueEnum;

use crate::args::{KernelChoice, NormChoice, SolverArgs};
use crate::output::{self, Sink};
use crate::pipeline;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchSolver {
    Dcd,
    Qp,
    /// Run both paths and report the speed ratio.
    Both,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct BenchArgs {
    /// Input dataset; mutually exclusive with the synthetic flags.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Treat feature indices in the input as 0-based instead of 1-based.
    #[arg(long, default_value_t = false)]
    pub zero_based: bool,

    /// Total feature count of the synthetic input.
    #[arg(long)]
    pub synth_features: Option<u32>,

    /// Instance count of the synthetic input.
    #[arg(long, default_value_t = 1000)]
    pub synth_instances: u32,

    /// Target stored values per synthetic instance.
    #[arg(long)]
    pub synth_nnz: Option<f64>,

    /// Column normalization.
    #[arg(long, value_enum, default_value_t = NormChoice::Auto)]
    pub norm: NormChoice,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Which solver path to time.
    #[arg(long = "solver", value_enum, default_value_t = BenchSolver::Dcd)]
    pub solver_path: BenchSolver,

    /// Column similarity for the constrained path.
    #[arg(long, value_enum, default_value_t = KernelChoice::Linear)]
    pub kernel: KernelChoice,

    /// Bandwidth of the gaussian kernel.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Output path stem; the table gets a `.bench.csv` suffix. Without it
    /// the table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Structural size accounting for the phases that were run. An estimate:
/// allocator overhead and transient buffers are not modeled.
fn estimate_peak_bytes(m: usize, n_stored: usize, nnz: usize, gram: bool) -> u64 {
    let column_store = nnz as u64 * 12 + (n_stored as u64 + 1) * 8 + m as u64 * 8;
    // Raw and normalized copies are alive at the same time.
    let datasets = 2 * column_store;
    let vectors = (n_stored as u64) * 8 * 4 + (m as u64) * 8;
    let gram_bytes = if gram {
        (n_stored as u64) * (n_stored as u64) * 8
    } else {
        0
    };
    datasets + vectors + gram_bytes
}

pub fn run(args: &BenchArgs, seed: u64) -> Result<()> {
    let run_config = output::run_config_value("bench", seed, args);

    let synthetic = args.synth_features.is_some();
    if args.data.is_some() && synthetic {
        return Err(Error::InvalidArgument(
            "pass either `--data` or `--synth-features`, not both".into(),
        ));
    }

    // Acquire the input bytes untimed, then time the parse itself.
    let (input_echo, input_bytes) = if let Some(path) = &args.data {
        let bytes = std::fs::read(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        (path.display().to_string(), bytes)
    } else {
        let features = args.synth_features.ok_or_else(|| {
            Error::InvalidArgument("pass `--data` or `--synth-features`".into())
        })?;
        if features < 3 {
            return Err(Error::InvalidArgument(
                "synthetic inputs need at least 3 features (2 informative + noise)".into(),
            ));
        }
        let config = SynthConfig {
            n_instances: args.synth_instances as usize,
            n_informative: 2,
            duplicates_of: Vec::new(),
            n_noise: features - 2,
            nnz_per_instance: args.synth_nnz,
            label_noise: 0.1,
            seed,
        };
        let (dataset, _truth) = generate(&config)?;
        let mut buf = Vec::new();
        dataset
            .write_svmlight(&mut buf)
            .expect("writing to memory cannot fail");
        (
            format!(
                "synthetic(instances={} features={} nnz_target={:?})",
                args.synth_instances, features, args.synth_nnz
            ),
            buf,
        )
    };

    let parse_opts = mmfs::ParseOptions {
        one_based: !args.zero_based,
        ..mmfs::ParseOptions::default()
    };
    let t = Instant::now();
    let dataset = SparseDataset::parse_svmlight(input_bytes.as_slice(), &parse_opts)?;
    let parse_s = t.elapsed().as_secs_f64();

    let norm = args
        .norm
        .resolve(dataset.n_instances(), dataset.n_stored_columns());
    let t = Instant::now();
    let (normed, _report) = dataset.normalized(norm)?;
    let normalize_s = t.elapsed().as_secs_f64();

    let solver: SolverConfig = args.solver.to_config(seed);
    let t = Instant::now();
    let relevance = correlation_relevance(&normed)?;
    let scaled = scale_relevance(&relevance, solver.theta)?;
    let relevance_s = t.elapsed().as_secs_f64();

    let run_dcd = matches!(args.solver_path, BenchSolver::Dcd | BenchSolver::Both);
    let run_qp = matches!(args.solver_path, BenchSolver::Qp | BenchSolver::Both);
    if run_dcd && args.kernel != KernelChoice::Linear {
        return Err(Error::InvalidArgument(
            "kernels need `--solver qp`; the coordinate-descent path is linear only".into(),
        ));
    }

    let mut dcd_solution = None;
    let mut dcd_solve_s = 0.0;
    if run_dcd {
        let t = Instant::now();
        dcd_solution = Some(mmfs_dcd(&normed, &scaled, &solver)?);
        dcd_solve_s = t.elapsed().as_secs_f64();
    }

    let mut qp_solution = None;
    let mut qp_solve_s = 0.0;
    if run_qp {
        let spec = pipeline::kernel_spec(args.kernel, args.sigma);
        let t = Instant::now();
        let gram = mmfs::gram_matrix(&normed, &spec)?;
        let r_sub = pipeline::align_relevance(&gram, &relevance)?;
        qp_solution = Some(mmfs::constrained_qp_solve(
            &gram,
            &r_sub,
            solver.theta,
            solver.c,
            solver.eps,
        )?);
        qp_solve_s = t.elapsed().as_secs_f64();
    }

    let primary = dcd_solution
        .as_ref()
        .or(qp_solution.as_ref())
        .expect("at least one solver path ran");
    let options = RankOptions {
        c: solver.c,
        ..RankOptions::default()
    };
    let t = Instant::now();
    let ranking = rank_features(primary, &relevance, &options)?;
    let rank_s = t.elapsed().as_secs_f64();

    let peak = estimate_peak_bytes(
        dataset.n_instances(),
        dataset.n_stored_columns(),
        dataset.nnz(),
        run_qp,
    );

    let mut body = String::new();
    writeln!(body, "# format: {}", mmfs::FORMAT_VERSION).unwrap();
    writeln!(body, "# kind: bench_report").unwrap();
    let mut text = format!("{}{body}", output::run_config_line(&run_config));
    writeln!(text, "metric,value").unwrap();
    writeln!(text, "input,{input_echo}").unwrap();
    writeln!(text, "instances,{}", dataset.n_instances()).unwrap();
    writeln!(text, "features,{}", dataset.n_features()).unwrap();
    writeln!(text, "nnz,{}", dataset.nnz()).unwrap();
    writeln!(text, "parse_seconds,{parse_s:.6}").unwrap();
    writeln!(text, "normalize_seconds,{normalize_s:.6}").unwrap();
    writeln!(text, "relevance_seconds,{relevance_s:.6}").unwrap();
    if let Some(sol) = &dcd_solution {
        writeln!(text, "solve_seconds,{dcd_solve_s:.6}").unwrap();
        writeln!(text, "solve_sweeps,{}", sol.sweeps_used).unwrap();
        writeln!(text, "solve_status,{}", sol.status).unwrap();
        writeln!(text, "solve_dual_objective,{}", sol.dual_objective).unwrap();
    }
    if let Some(sol) = &qp_solution {
        writeln!(text, "qp_solve_seconds,{qp_solve_s:.6}").unwrap();
        writeln!(text, "qp_solve_sweeps,{}", sol.sweeps_used).unwrap();
        writeln!(text, "qp_solve_status,{}", sol.status).unwrap();
        writeln!(text, "qp_solve_dual_objective,{}", sol.dual_objective).unwrap();
    }
    if let (Some(_), Some(_)) = (&dcd_solution, &qp_solution) {
        if dcd_solve_s > 0.0 {
            writeln!(text, "speedup_dcd_over_qp,{:.3}", qp_solve_s / dcd_solve_s).unwrap();
        }
    }
    writeln!(text, "rank_seconds,{rank_s:.6}").unwrap();
    writeln!(
        text,
        "total_seconds,{:.6}",
        parse_s + normalize_s + relevance_s + dcd_solve_s + qp_solve_s + rank_s
    )
    .unwrap();
    writeln!(text, "ranked_features,{}", ranking.entries().len()).unwrap();
    writeln!(text, "peak_memory_estimate_bytes,{peak}").unwrap();

    Sink::new(&args.out).write(".bench.csv", &text)?;
    eprintln!(
        "bench: parse {parse_s:.3}s, normalize {normalize_s:.3}s, relevance {relevance_s:.3}s, solve {:.3}s, rank {rank_s:.3}s",
        dcd_solve_s + qp_solve_s,
    );
    Ok(())
}
