//! Shared pipeline steps: dataset loading and the two ranking paths.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use mmfs::{
    constrained_qp_solve, correlation_relevance, gram_matrix, rank_features, whole_data_ranking,
    DualSolution, Error, FeatureRanking, KernelSpec, NormMode, ParseOptions, RankOptions, Result,
    SelectorConfig, SolverConfig, SparseDataset,
};

use crate::args::{KernelChoice, SolverChoice};

/// Opens and parses an SVMlight file. A missing or unreadable file surfaces
/// as an I/O error before any output is produced.
pub fn load_dataset(path: &Path, zero_based: bool) -> Result<SparseDataset> {
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let opts = ParseOptions {
        one_based: !zero_based,
        ..ParseOptions::default()
    };
    SparseDataset::parse_svmlight(BufReader::new(file), &opts)
}

/// Output of either ranking path.
pub struct SelectOutcome {
    pub ranking: FeatureRanking,
    pub solution: DualSolution,
    /// Settings echoed into the solution artifact.
    pub solver_echo: SolverConfig,
}

pub fn kernel_spec(kernel: KernelChoice, sigma: f64) -> KernelSpec {
    match kernel {
        KernelChoice::Linear => KernelSpec::Linear,
        KernelChoice::Poly2 => KernelSpec::Poly2,
        KernelChoice::Gaussian => KernelSpec::Gaussian { sigma },
    }
}

/// Gathers the relevance scores of exactly the Gram matrix's columns. The
/// Gram covers the usable (non-constant) columns, a subset of the scored
/// ones; both id lists are ascending.
pub fn align_relevance(
    gram: &mmfs::GramMatrix,
    relevance: &mmfs::RelevanceVector,
) -> Result<Vec<f64>> {
    let rel_ids = relevance.feature_ids();
    let rel_vals = relevance.values();
    let mut r_sub = Vec::with_capacity(gram.order());
    let mut cursor = 0usize;
    for &id in gram.feature_ids() {
        while cursor < rel_ids.len() && rel_ids[cursor] < id {
            cursor += 1;
        }
        if cursor >= rel_ids.len() || rel_ids[cursor] != id {
            return Err(Error::Shape(format!(
                "Gram column {id} has no relevance score"
            )));
        }
        r_sub.push(rel_vals[cursor]);
    }
    Ok(r_sub)
}

/// Ranks the features of a raw dataset with the requested solver path.
///
/// The coordinate-descent path streams over stored columns; the constrained
/// path materializes a kernel Gram matrix first and is gated by the Gram
/// size limit. Both rank against unscaled relevance scores, so the two paths
/// order features on the same scale.
pub fn run_selection(
    dataset: &SparseDataset,
    norm: NormMode,
    solver: SolverConfig,
    choice: SolverChoice,
    kernel: KernelChoice,
    sigma: f64,
) -> Result<SelectOutcome> {
    match choice {
        SolverChoice::Dcd => {
            if kernel != KernelChoice::Linear {
                return Err(Error::InvalidArgument(
                    "kernels need `--solver qp`; the coordinate-descent path is linear only"
                        .into(),
                ));
            }
            let config = SelectorConfig { norm, solver };
            let (ranking, solution) = whole_data_ranking(dataset, &config)?;
            Ok(SelectOutcome {
                ranking,
                solution,
                solver_echo: config.solver,
            })
        }
        SolverChoice::Qp => {
            let (normed, _report) = dataset.normalized(norm)?;
            let relevance = correlation_relevance(&normed)?;
            let spec = kernel_spec(kernel, sigma);
            let gram = gram_matrix(&normed, &spec)?;
            let r_sub = align_relevance(&gram, &relevance)?;
            let solution =
                constrained_qp_solve(&gram, &r_sub, solver.theta, solver.c, solver.eps)?;
            let options = RankOptions {
                c: solver.c,
                ..RankOptions::default()
            };
            let ranking = rank_features(&solution, &relevance, &options)?;
            Ok(SelectOutcome {
                ranking,
                solution,
                solver_echo: solver,
            })
        }
    }
}
