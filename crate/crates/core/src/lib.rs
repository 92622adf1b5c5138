//! Margin-based feature selection for sparse, feature-major data.
//!
//! The library treats features as the objects of interest: every feature
//! column is scored against the label vector, and a margin-style quadratic
//! dual over the feature set trades that relevance against pairwise
//! redundancy. Two solver paths are provided — a coordinate-descent solver on
//! the box-constrained dual whose sweeps cost O(nnz), and a projected-gradient
//! solver on the simplex-box dual that also covers correlation-based QP
//! selection — plus ranking and top-K extraction, downstream linear-SVM
//! evaluation protocols, and a deterministic synthetic data generator.
//! All randomness flows from caller-supplied seeds.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod limits;
pub mod metrics;
pub mod selection;
pub mod solvers;
pub mod synth;
#[cfg(test)]
mod test_util;
mod util;

pub use dataset::{NormMode, NormState, NormalizationReport, ParseOptions, SparseDataset};
pub use error::{Error, Result};
pub use eval::{
    evaluate, run_fold, sweep_gamma, train_linear_svm, whole_data_ranking, EvalProtocol,
    EvalReport, FoldArtifacts, GammaRow, GammaSweep, KRow, LinearSvm, SelectionMode,
    SelectorConfig, SvmConfig,
};
pub use metrics::{
    correlation_relevance, gram_matrix, kernel_eval, mi_matrix, mi_relevance, scale_relevance,
    GramMatrix, KernelSpec, MiBinning, RelevanceVector,
};
pub use selection::{rank_features, top_k, FeatureRanking, RankEntry, RankOptions, Tier, TopK};
pub use solvers::{
    constrained_qp_solve, dual_objective, mmfs_dcd, mmfs_dcd_observed, primal_objective,
    project_box_simplex, DualSolution, SolveObserver, SolveStatus, SolverConfig,
};
pub use synth::{generate, GroundTruth, SynthConfig};
pub use util::derive_seed;

/// Version tag embedded in every serialized artifact.
pub const FORMAT_VERSION: &str = "mmfs/1";
