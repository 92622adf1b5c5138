//! Shared argument groups and the config echo embedded in every artifact.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mmfs::{NormMode, SolverConfig};
use serde::Serialize;

use crate::seeds;

/// Input dataset location and interpretation.
#[derive(Args, Clone, Debug, Serialize)]
pub struct DataArgs {
    /// Input dataset in SVMlight text form.
    #[arg(long)]
    pub data: PathBuf,

    /// Treat feature indices in the input as 0-based instead of 1-based.
    #[arg(long, default_value_t = false)]
    pub zero_based: bool,

    /// Column normalization. `auto` centers when the dense budget allows it
    /// and falls back to plain unit scaling otherwise.
    #[arg(long, value_enum, default_value_t = NormChoice::Auto)]
    pub norm: NormChoice,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    Auto,
    Unit,
    Centered,
}

impl NormChoice {
    /// Resolves `auto` against the same dense budget the normalizer
    /// enforces, so the choice is made once and holds for every fold.
    pub fn resolve(self, n_instances: usize, n_stored_columns: usize) -> NormMode {
        match self {
            NormChoice::Unit => NormMode::UnitNorm,
            NormChoice::Centered => NormMode::CenteredUnitNorm,
            NormChoice::Auto => {
                let projected = n_instances.saturating_mul(n_stored_columns);
                if projected > mmfs::limits::dense_limit() {
                    NormMode::UnitNorm
                } else {
                    NormMode::CenteredUnitNorm
                }
            }
        }
    }
}

/// Solver tunables shared by the ranking and evaluation commands.
#[derive(Args, Clone, Debug, Serialize)]
pub struct SolverArgs {
    /// Relevance/redundancy trade-off, strictly between 0 and 1.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,

    /// Squared-sum penalty strength; also sets the bias scale.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Box bound on every dual weight.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,

    /// Stopping tolerance on the worst optimality violation.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,

    /// Sweep budget before the solver gives up.
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: u32,

    /// Disable shrinking of coordinates pinned at a bound.
    #[arg(long, default_value_t = false)]
    pub no_shrinking: bool,
}

impl SolverArgs {
    /// Builds the solver settings, deriving the permutation seed from the
    /// run seed so one `--seed` drives every randomized component.
    pub fn to_config(&self, run_seed: u64) -> SolverConfig {
        SolverConfig {
            c: self.c,
            gamma: self.gamma,
            theta: self.theta,
            eps: self.eps,
            max_sweeps: self.max_sweeps,
            shrinking: !self.no_shrinking,
            rng_seed: seeds::solver_seed(run_seed),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Coordinate descent on the box dual; linear kernel only.
    Dcd,
    /// Projected gradient on the simplex-box program over a kernel Gram.
    Qp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Linear,
    Poly2,
    Gaussian,
}

/// Evaluation protocol flags shared by `eval` and `sweep`.
#[derive(Args, Clone, Debug, Serialize)]
pub struct ProtocolArgs {
    /// How train/test folds are formed.
    #[arg(long, value_enum, default_value_t = ProtocolChoice::Loocv)]
    pub protocol: ProtocolChoice,

    /// Held-out test set for `--protocol fixed`.
    #[arg(long)]
    pub test_data: Option<PathBuf>,

    /// Number of repeats for `--protocol random`.
    #[arg(long, default_value_t = 10)]
    pub repeats: u32,

    /// Held-out fraction per repeat for `--protocol random`.
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,

    /// Box parameter of the downstream linear classifier.
    #[arg(long, default_value_t = 1.0)]
    pub c_clf: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolChoice {
    /// Leave-one-out cross-validation.
    Loocv,
    /// Repeated random train/test partitions.
    Random,
    /// Train on the whole input, test on `--test-data`.
    Fixed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutFormat {
    Tsv,
    Json,
}
