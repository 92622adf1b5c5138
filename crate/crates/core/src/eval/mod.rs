//! Downstream evaluation: how well do the top-K features support a linear
//! classifier?
//!
//! The entry point is [`evaluate`]: it takes a **raw** dataset, a selection
//! mode, a grid of subset sizes, and a resampling protocol, and reports mean
//! test accuracy per subset size. Every fold normalizes, scores, and (in
//! [`SelectionMode::PerFold`]) re-selects features from its own training
//! instances only, so no statistic of a test instance can influence the model
//! that predicts it. [`SelectionMode::Whole`] instead applies one fixed
//! ranking to every fold — cheaper, and useful for replicating results that
//! were produced that way, but optimistic whenever selection saw the test
//! data.
//!
//! Classifier inputs are canonical: the K selected features are used in
//! ascending id order, so a subset equal to the full feature set trains
//! exactly the same model as no selection at all.

mod svm;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{NormMode, NormState, SparseDataset};
use crate::error::{Error, Result};
use crate::limits;
use crate::metrics::{correlation_relevance, scale_relevance};
use crate::selection::{rank_features, top_k, FeatureRanking, RankOptions};
use crate::solvers::{mmfs_dcd, DualSolution, SolverConfig};
use crate::util::derive_seed;
use crate::FORMAT_VERSION;

pub use svm::{decision_value, train_linear_svm, LinearSvm, SvmConfig};

/// Base seed for per-fold classifier shuffling; combined with a running fold
/// counter via [`derive_seed`] so repeated runs are bitwise reproducible.
pub const SVM_SEED_BASE: u64 = 0xC1A5_5EED;

/// Everything needed to select features inside a training fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    /// Column normalization applied to each training fold.
    pub norm: NormMode,
    /// Solver settings; `theta` also controls relevance prescaling.
    pub solver: SolverConfig,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            norm: NormMode::CenteredUnitNorm,
            solver: SolverConfig::default(),
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.solver.theta > 0.0 && self.solver.theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relevance prescaling needs a trade-off strictly inside (0, 1), got {}",
                self.solver.theta
            )));
        }
        Ok(())
    }
}

/// How each fold obtains its feature ranking.
#[derive(Clone, Copy, Debug)]
pub enum SelectionMode<'a> {
    /// Re-select inside every training fold (leak-free protocol).
    PerFold(&'a SelectorConfig),
    /// Apply one fixed ranking everywhere; `norm` still controls how fold
    /// classifiers transform their inputs.
    Whole {
        ranking: &'a FeatureRanking,
        norm: NormMode,
    },
}

impl SelectionMode<'_> {
    fn norm(&self) -> NormMode {
        match self {
            SelectionMode::PerFold(cfg) => cfg.norm,
            SelectionMode::Whole { norm, .. } => *norm,
        }
    }

    fn echo(&self) -> &'static str {
        match self {
            SelectionMode::PerFold(_) => "per_fold",
            SelectionMode::Whole { .. } => "whole_data",
        }
    }
}

/// Resampling protocol for accuracy estimation.
#[derive(Clone, Debug)]
pub enum EvalProtocol {
    /// Leave-one-out: one fold per instance. Deterministic; gated by the
    /// dense limit because it runs the full pipeline once per instance.
    Loocv,
    /// Train on all of the primary dataset, test on a held-out raw dataset.
    FixedSplit(SparseDataset),
    /// Repeated random train/test partitions.
    RandomSplits {
        n_repeats: u32,
        test_fraction: f64,
        seed: u64,
    },
}

impl EvalProtocol {
    fn echo(&self) -> String {
        match self {
            EvalProtocol::Loocv => "loocv".into(),
            EvalProtocol::FixedSplit(t) => format!("fixed_split(m_test={})", t.n_instances()),
            EvalProtocol::RandomSplits {
                n_repeats,
                test_fraction,
                seed,
            } => format!("random_splits(n_repeats={n_repeats}, test_fraction={test_fraction}, seed={seed})"),
        }
    }
}

/// Accuracy summary for one subset size.
#[derive(Clone, Debug, PartialEq)]
pub struct KRow {
    pub k: usize,
    /// Mean test accuracy in percent over repeats.
    pub mean_accuracy: f64,
    /// Population standard deviation over repeats; exactly zero for the
    /// deterministic protocols (one repeat).
    pub std_accuracy: f64,
    /// Worst case over folds of how many of the K slots fell to inactive
    /// features ordered by relevance alone.
    pub n_fallback: usize,
}

/// Result of [`evaluate`]: one row per requested subset size plus the best.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    rows: Vec<KRow>,
    best_index: usize,
    protocol: String,
    selection: String,
    c_clf: f64,
    n_repeats: u32,
    n_degenerate_folds: u32,
}

impl EvalReport {
    pub fn rows(&self) -> &[KRow] {
        &self.rows
    }

    /// Row with the highest mean accuracy; ties go to the smallest K.
    pub fn best(&self) -> &KRow {
        &self.rows[self.best_index]
    }

    pub fn protocol(&self) -> &str {
        &self.protocol
    }

    pub fn selection(&self) -> &str {
        &self.selection
    }

    pub fn c_clf(&self) -> f64 {
        self.c_clf
    }

    pub fn n_repeats(&self) -> u32 {
        self.n_repeats
    }

    /// Folds whose training side contained a single class and fell back to a
    /// majority predictor.
    pub fn n_degenerate_folds(&self) -> u32 {
        self.n_degenerate_folds
    }

    /// Tab-separated table with `#` header lines; floats keep full precision.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# format: {FORMAT_VERSION}")?;
        writeln!(out, "# kind: eval_report")?;
        writeln!(out, "# protocol: {}", self.protocol)?;
        writeln!(out, "# selection: {}", self.selection)?;
        writeln!(out, "# c_clf: {}", self.c_clf)?;
        writeln!(out, "# n_repeats: {}", self.n_repeats)?;
        writeln!(out, "# degenerate_folds: {}", self.n_degenerate_folds)?;
        writeln!(out, "# best_k: {}", self.best().k)?;
        writeln!(out, "# columns: k\tmean_accuracy\tstd_accuracy\tn_fallback")?;
        for row in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                row.k, row.mean_accuracy, row.std_accuracy, row.n_fallback
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "format": FORMAT_VERSION,
            "kind": "eval_report",
            "protocol": self.protocol,
            "selection": self.selection,
            "c_clf": self.c_clf,
            "n_repeats": self.n_repeats,
            "degenerate_folds": self.n_degenerate_folds,
            "best_k": self.best().k,
            "rows": self.rows.iter().map(|r| json!({
                "k": r.k,
                "mean_accuracy": r.mean_accuracy,
                "std_accuracy": r.std_accuracy,
                "n_fallback": r.n_fallback,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Training-side artifacts of a single fold, exposed for auditing that test
/// instances cannot influence selection or the classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldArtifacts {
    /// Selected feature ids (0-based, ascending) that survived in the fold.
    pub selected: Vec<u32>,
    /// Classifier weights over `selected` plus a trailing bias.
    pub weights: Vec<f64>,
    /// True when the fold fell back to a majority predictor.
    pub degenerate: bool,
    pub n_correct: usize,
    pub n_test: usize,
    pub n_from_fallback: usize,
}

/// One accuracy surface cell from [`sweep_gamma`].
#[derive(Clone, Debug, PartialEq)]
pub struct GammaRow {
    pub gamma: f64,
    pub k: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Long-format accuracy surface over a mass-penalty grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSweep {
    rows: Vec<GammaRow>,
}

impl GammaSweep {
    pub fn rows(&self) -> &[GammaRow] {
        &self.rows
    }

    /// Plot-ready CSV: `#` metadata lines, then one `gamma,k,...` row per cell.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# format: {FORMAT_VERSION}")?;
        writeln!(out, "# kind: gamma_sweep")?;
        writeln!(out, "gamma,k,mean_accuracy,std_accuracy")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                row.gamma, row.k, row.mean_accuracy, row.std_accuracy
            )?;
        }
        Ok(())
    }
}

/// Normalizes the whole dataset, scores relevance, solves, and ranks — the
/// selection pipeline without any resampling. Input must be raw.
pub fn whole_data_ranking(
    dataset: &SparseDataset,
    config: &SelectorConfig,
) -> Result<(FeatureRanking, DualSolution)> {
    config.validate()?;
    if dataset.norm_state() != NormState::Raw {
        return Err(Error::State(
            "selection starts from raw data; it normalizes internally".into(),
        ));
    }
    let (norm, _report) = dataset.normalized(config.norm)?;
    let relevance = correlation_relevance(&norm)?;
    let scaled = scale_relevance(&relevance, config.solver.theta)?;
    let solution = mmfs_dcd(&norm, &scaled, &config.solver)?;
    let ranking = rank_features(&solution, &relevance, &RankOptions::for_config(&config.solver))?;
    Ok((ranking, solution))
}

/// Estimates test accuracy of a linear classifier restricted to the top-K
/// features, for every K in `k_grid`, under the given protocol.
///
/// `dataset` must be raw: each fold derives normalization statistics (and,
/// in per-fold mode, the feature ranking itself) from its training instances
/// only. Subset sizes must be strictly increasing and start at 1 or more; a
/// K beyond the number of rankable features simply uses all of them.
pub fn evaluate(
    dataset: &SparseDataset,
    selection: SelectionMode<'_>,
    k_grid: &[usize],
    protocol: &EvalProtocol,
    c_clf: f64,
) -> Result<EvalReport> {
    if dataset.norm_state() != NormState::Raw {
        return Err(Error::State(
            "evaluation needs raw data; each fold normalizes from its own training instances".into(),
        ));
    }
    validate_k_grid(k_grid)?;
    if !(c_clf > 0.0 && c_clf.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "classifier cost must be positive and finite, got {c_clf}"
        )));
    }
    if let SelectionMode::PerFold(cfg) = selection {
        cfg.validate()?;
    }
    let repeats = plan_folds(dataset, protocol)?;

    let nk = k_grid.len();
    let mut accuracies: Vec<Vec<f64>> = vec![Vec::with_capacity(repeats.len()); nk];
    let mut max_fallback = vec![0usize; nk];
    let mut degenerate_folds = 0u32;
    let mut fold_counter = 0u64;
    for folds in &repeats {
        let mut correct = vec![0usize; nk];
        let mut total = vec![0usize; nk];
        for spec in folds {
            let results = eval_fold(dataset, spec, &selection, k_grid, c_clf, fold_counter)?;
            if results.iter().any(|r| r.degenerate) {
                degenerate_folds += 1;
            }
            for (ki, fold_k) in results.iter().enumerate() {
                correct[ki] += fold_k.correct;
                total[ki] += fold_k.total;
                max_fallback[ki] = max_fallback[ki].max(fold_k.n_fallback);
            }
            fold_counter += 1;
        }
        for ki in 0..nk {
            accuracies[ki].push(100.0 * correct[ki] as f64 / total[ki] as f64);
        }
    }

    let mut rows = Vec::with_capacity(nk);
    for (ki, &k) in k_grid.iter().enumerate() {
        let xs = &accuracies[ki];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).max(0.0);
        rows.push(KRow {
            k,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            n_fallback: max_fallback[ki],
        });
    }
    let mut best_index = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.mean_accuracy > rows[best_index].mean_accuracy {
            best_index = i;
        }
    }
    Ok(EvalReport {
        rows,
        best_index,
        protocol: protocol.echo(),
        selection: selection.echo().to_string(),
        c_clf,
        n_repeats: repeats.len() as u32,
        n_degenerate_folds: degenerate_folds,
    })
}

/// Runs one explicit train/test fold and returns its training-side artifacts
/// along with test counts. Diagnostic companion to [`evaluate`]: the caller
/// supplies disjoint, strictly increasing row sets.
pub fn run_fold(
    dataset: &SparseDataset,
    train_rows: &[u32],
    test_rows: &[u32],
    selection: SelectionMode<'_>,
    k: usize,
    c_clf: f64,
) -> Result<FoldArtifacts> {
    if dataset.norm_state() != NormState::Raw {
        return Err(Error::State(
            "evaluation needs raw data; each fold normalizes from its own training instances".into(),
        ));
    }
    validate_k_grid(&[k])?;
    if let SelectionMode::PerFold(cfg) = selection {
        cfg.validate()?;
    }
    for (name, rows) in [("train", train_rows), ("test", test_rows)] {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(format!("empty {name} fold")));
        }
        for w in rows.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidArgument(format!(
                    "{name} rows must be strictly increasing"
                )));
            }
        }
        if *rows.last().unwrap() as usize >= dataset.n_instances() {
            return Err(Error::Shape(format!(
                "{name} row {} outside 0..{}",
                rows.last().unwrap(),
                dataset.n_instances()
            )));
        }
    }
    let spec = FoldSpec::Internal {
        train: train_rows.to_vec(),
        test: test_rows.to_vec(),
    };
    let mut results = eval_fold(dataset, &spec, &selection, &[k], c_clf, 0)?;
    let fold_k = results.pop().expect("one result per requested subset size");
    Ok(FoldArtifacts {
        selected: fold_k.selected,
        weights: fold_k.weights,
        degenerate: fold_k.degenerate,
        n_correct: fold_k.correct,
        n_test: fold_k.total,
        n_from_fallback: fold_k.n_fallback,
    })
}

/// Full factorial accuracy surface over mass penalties and subset sizes.
///
/// Runs [`evaluate`] once per penalty value with the solver's `gamma`
/// replaced; `whole_data_selection` switches every cell to one fixed ranking
/// computed on all instances (the optimistic protocol). A single-penalty,
/// single-K call reduces to one [`evaluate`] cell.
pub fn sweep_gamma(
    dataset: &SparseDataset,
    gamma_grid: &[f64],
    k_grid: &[usize],
    protocol: &EvalProtocol,
    selector: &SelectorConfig,
    c_clf: f64,
    whole_data_selection: bool,
) -> Result<GammaSweep> {
    if gamma_grid.is_empty() {
        return Err(Error::InvalidArgument("mass-penalty grid is empty".into()));
    }
    for &g in gamma_grid {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mass penalty must be positive and finite, got {g}"
            )));
        }
    }
    let mut rows = Vec::with_capacity(gamma_grid.len() * k_grid.len());
    for &gamma in gamma_grid {
        let cfg = SelectorConfig {
            norm: selector.norm,
            solver: SolverConfig {
                gamma,
                ..selector.solver.clone()
            },
        };
        let report = if whole_data_selection {
            let (ranking, _) = whole_data_ranking(dataset, &cfg)?;
            evaluate(
                dataset,
                SelectionMode::Whole {
                    ranking: &ranking,
                    norm: cfg.norm,
                },
                k_grid,
                protocol,
                c_clf,
            )?
        } else {
            evaluate(dataset, SelectionMode::PerFold(&cfg), k_grid, protocol, c_clf)?
        };
        for row in report.rows() {
            rows.push(GammaRow {
                gamma,
                k: row.k,
                mean_accuracy: row.mean_accuracy,
                std_accuracy: row.std_accuracy,
            });
        }
    }
    Ok(GammaSweep { rows })
}

enum FoldSpec<'a> {
    Internal { train: Vec<u32>, test: Vec<u32> },
    External { train: Vec<u32>, test: &'a SparseDataset },
}

struct FoldK {
    correct: usize,
    total: usize,
    n_fallback: usize,
    degenerate: bool,
    selected: Vec<u32>,
    weights: Vec<f64>,
}

fn validate_k_grid(k_grid: &[usize]) -> Result<()> {
    if k_grid.is_empty() {
        return Err(Error::InvalidArgument("subset-size grid is empty".into()));
    }
    if k_grid[0] == 0 {
        return Err(Error::InvalidArgument("subset sizes start at 1".into()));
    }
    for w in k_grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidArgument(
                "subset-size grid must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

/// Leave-one-out runs the whole pipeline once per instance, touching roughly
/// `m * nnz` stored values; refuse when that exceeds the dense limit.
fn check_loocv_budget(m: usize, nnz: usize, limit: usize) -> Result<()> {
    let touched = m.saturating_mul(nnz.max(1));
    if touched > limit {
        return Err(Error::Capacity(format!(
            "leave-one-out would touch ~{touched} stored values across {m} folds \
             (> limit {limit}); use random splits or raise the limit"
        )));
    }
    Ok(())
}

fn label_sign(label: f64) -> Result<f64> {
    if label == 0.0 || !label.is_finite() {
        return Err(Error::State(
            "label with no sign; labels are not binary".into(),
        ));
    }
    Ok(if label > 0.0 { 1.0 } else { -1.0 })
}

fn plan_folds<'a>(
    dataset: &SparseDataset,
    protocol: &'a EvalProtocol,
) -> Result<Vec<Vec<FoldSpec<'a>>>> {
    let m = dataset.n_instances();
    match protocol {
        EvalProtocol::Loocv => {
            if m < 2 {
                return Err(Error::InvalidArgument(
                    "leave-one-out needs at least 2 instances".into(),
                ));
            }
            check_loocv_budget(m, dataset.nnz(), limits::dense_limit())?;
            let folds = (0..m as u32)
                .map(|i| FoldSpec::Internal {
                    train: (0..m as u32).filter(|&j| j != i).collect(),
                    test: vec![i],
                })
                .collect();
            Ok(vec![folds])
        }
        EvalProtocol::FixedSplit(test) => {
            if test.norm_state() != NormState::Raw {
                return Err(Error::State(
                    "held-out split must be raw; it is transformed with training statistics".into(),
                ));
            }
            if test.n_instances() == 0 {
                return Err(Error::InvalidArgument("held-out split has no instances".into()));
            }
            test.binary_labels()?;
            Ok(vec![vec![FoldSpec::External {
                train: (0..m as u32).collect(),
                test,
            }]])
        }
        EvalProtocol::RandomSplits {
            n_repeats,
            test_fraction,
            seed,
        } => {
            if *n_repeats == 0 {
                return Err(Error::InvalidArgument("need at least one repeat".into()));
            }
            if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "test fraction must lie strictly inside (0, 1), got {test_fraction}"
                )));
            }
            if m < 2 {
                return Err(Error::InvalidArgument(
                    "need at least 2 instances to split".into(),
                ));
            }
            let mut out = Vec::with_capacity(*n_repeats as usize);
            for rep in 0..*n_repeats {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(*seed, rep as u64));
                let mut perm: Vec<u32> = (0..m as u32).collect();
                perm.shuffle(&mut rng);
                let n_test = ((test_fraction * m as f64).round() as usize).clamp(1, m - 1);
                let mut test = perm[..n_test].to_vec();
                let mut train = perm[n_test..].to_vec();
                test.sort_unstable();
                train.sort_unstable();
                out.push(vec![FoldSpec::Internal { train, test }]);
            }
            Ok(out)
        }
    }
}

/// Raw values of the kept features at the internal test rows
/// (`n_test x kept.len()`, implicit zeros materialized).
fn test_matrix_internal(
    dataset: &SparseDataset,
    test_rows: &[u32],
    kept: &[u32],
) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; kept.len()]; test_rows.len()];
    for (j, &id) in kept.iter().enumerate() {
        if let Some(pos) = dataset.position_of(id) {
            let (rows, vals) = dataset.column(pos);
            let mut t = 0usize;
            for (&r, &v) in rows.iter().zip(vals) {
                while t < test_rows.len() && test_rows[t] < r {
                    t += 1;
                }
                if t == test_rows.len() {
                    break;
                }
                if test_rows[t] == r {
                    out[t][j] = v;
                }
            }
        }
    }
    out
}

fn test_matrix_external(test: &SparseDataset, kept: &[u32]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; kept.len()]; test.n_instances()];
    for (j, &id) in kept.iter().enumerate() {
        if let Some(pos) = test.position_of(id) {
            let (rows, vals) = test.column(pos);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r as usize][j] = v;
            }
        }
    }
    out
}

fn eval_fold(
    dataset: &SparseDataset,
    spec: &FoldSpec,
    selection: &SelectionMode,
    k_grid: &[usize],
    c_clf: f64,
    fold_counter: u64,
) -> Result<Vec<FoldK>> {
    let (train_rows, test_labels) = match spec {
        FoldSpec::Internal { train, test } => {
            let labels = dataset.labels();
            let mut signs = Vec::with_capacity(test.len());
            for &r in test {
                signs.push(label_sign(labels[r as usize])?);
            }
            (train.as_slice(), signs)
        }
        FoldSpec::External { train, test } => (train.as_slice(), test.binary_labels()?),
    };
    let n_test = test_labels.len();

    let labels_all = dataset.labels();
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for &r in train_rows {
        if label_sign(labels_all[r as usize])? > 0.0 {
            n_pos += 1;
        } else {
            n_neg += 1;
        }
    }
    if train_rows.is_empty() {
        return Err(Error::InvalidArgument("empty training fold".into()));
    }

    let train_sub = if n_pos == 0 || n_neg == 0 {
        None
    } else {
        Some(dataset.subset_instances(train_rows)?)
    };
    // A fold whose training columns all emptied out cannot be normalized;
    // like the single-class case it degrades to a majority predictor.
    let degenerate = match &train_sub {
        None => true,
        Some(sub) => sub.feature_ids().is_empty(),
    };
    if degenerate {
        let majority = if n_pos >= n_neg { 1.0 } else { -1.0 };
        let correct = test_labels.iter().filter(|&&y| y == majority).count();
        return Ok(k_grid
            .iter()
            .map(|_| FoldK {
                correct,
                total: n_test,
                n_fallback: 0,
                degenerate: true,
                selected: Vec::new(),
                weights: vec![majority],
            })
            .collect());
    }
    let train_sub = train_sub.expect("non-degenerate fold has a training subset");

    let (norm, report) = train_sub.normalized(selection.norm())?;
    let train_labels = norm.binary_labels()?;

    let fold_ranking;
    let ranking: &FeatureRanking = match selection {
        SelectionMode::PerFold(cfg) => {
            let relevance = correlation_relevance(&norm)?;
            let scaled = scale_relevance(&relevance, cfg.solver.theta)?;
            let solution = mmfs_dcd(&norm, &scaled, &cfg.solver)?;
            fold_ranking =
                rank_features(&solution, &relevance, &RankOptions::for_config(&cfg.solver))?;
            &fold_ranking
        }
        SelectionMode::Whole { ranking, .. } => ranking,
    };

    let svm_config = SvmConfig {
        c: c_clf,
        seed: derive_seed(SVM_SEED_BASE, fold_counter),
        ..SvmConfig::default()
    };
    let mut out = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let top = top_k(ranking, k)?;
        let mut ids = top.feature_ids.clone();
        ids.sort_unstable();
        // Keep the subset that still exists in this training fold, in
        // ascending id order; features that emptied out contribute nothing
        // to either side, so dropping them changes no prediction.
        let mut positions = Vec::with_capacity(ids.len());
        let mut kept = Vec::with_capacity(ids.len());
        for &id in &ids {
            if let Some(pos) = norm.position_of(id) {
                positions.push(pos);
                kept.push(id);
            }
        }
        let rows = norm.rows_for_positions(&positions);
        let model = train_linear_svm(&rows, &train_labels, positions.len(), &svm_config)?;

        let raw_values = match spec {
            FoldSpec::Internal { test, .. } => test_matrix_internal(dataset, test, &kept),
            FoldSpec::External { test, .. } => test_matrix_external(test, &kept),
        };
        let mut correct = 0usize;
        let mut row_buf: Vec<(u32, f64)> = Vec::with_capacity(kept.len());
        for (t, &y) in test_labels.iter().enumerate() {
            row_buf.clear();
            for (j, &pos) in positions.iter().enumerate() {
                let v = report.transform(pos, raw_values[t][j]);
                if v != 0.0 {
                    row_buf.push((j as u32, v));
                }
            }
            if model.predict(&row_buf) == y {
                correct += 1;
            }
        }
        out.push(FoldK {
            correct,
            total: n_test,
            n_fallback: top.n_from_fallback,
            degenerate: model.degenerate,
            selected: kept,
            weights: model.weights,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SparseDataset;
    use crate::test_util::random_dataset;

    /// Labels follow the sign of feature 0 exactly; features 1.. are noise
    /// from a fixed table.
    fn signal_dataset(m: usize) -> SparseDataset {
        let noise = [0.31, -0.47, 0.11, 0.83, -0.29, 0.57, -0.71, 0.19];
        let mut entries = Vec::new();
        let mut labels = Vec::new();
        for i in 0..m {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            labels.push(y);
            entries.push((i as u32, 0u32, y));
            entries.push((i as u32, 1u32, noise[i % noise.len()]));
            entries.push((i as u32, 2u32, noise[(i * 3 + 1) % noise.len()]));
        }
        SparseDataset::from_entries(m, 3, &entries, labels).unwrap()
    }

    fn selector() -> SelectorConfig {
        SelectorConfig::default()
    }

    #[test]
    fn perfect_single_feature_reaches_full_accuracy_under_loocv() {
        let ds = signal_dataset(10);
        let cfg = selector();
        let report = evaluate(
            &ds,
            SelectionMode::PerFold(&cfg),
            &[1],
            &EvalProtocol::Loocv,
            1.0,
        )
        .unwrap();
        assert_eq!(report.rows().len(), 1);
        assert_eq!(report.rows()[0].k, 1);
        assert_eq!(report.rows()[0].mean_accuracy, 100.0);
        assert_eq!(report.rows()[0].std_accuracy, 0.0);
        assert_eq!(report.rows()[0].n_fallback, 0);
        assert_eq!(report.best().k, 1);
        assert_eq!(report.n_degenerate_folds(), 0);
    }

    #[test]
    fn perfect_single_feature_reaches_full_accuracy_on_random_splits() {
        let ds = signal_dataset(12);
        let cfg = selector();
        let report = evaluate(
            &ds,
            SelectionMode::PerFold(&cfg),
            &[1, 2],
            &EvalProtocol::RandomSplits {
                n_repeats: 5,
                test_fraction: 0.25,
                seed: 13,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(report.n_repeats(), 5);
        assert_eq!(report.rows()[0].mean_accuracy, 100.0);
        assert_eq!(report.rows()[0].std_accuracy, 0.0);
    }

    #[test]
    fn fixed_split_tests_on_the_held_out_data() {
        let train = signal_dataset(10);
        let test = signal_dataset(6);
        let cfg = selector();
        let report = evaluate(
            &train,
            SelectionMode::PerFold(&cfg),
            &[1],
            &EvalProtocol::FixedSplit(test),
            1.0,
        )
        .unwrap();
        assert_eq!(report.rows()[0].mean_accuracy, 100.0);
        assert_eq!(report.rows()[0].std_accuracy, 0.0);
        assert_eq!(report.n_repeats(), 1);
        assert!(report.protocol().contains("m_test=6"));
    }

    #[test]
    fn loocv_accuracy_is_a_multiple_of_one_fold() {
        let m = 7;
        let ds = random_dataset(m, 5, 0xEE);
        let cfg = selector();
        let report = evaluate(
            &ds,
            SelectionMode::PerFold(&cfg),
            &[2, 4],
            &EvalProtocol::Loocv,
            1.0,
        )
        .unwrap();
        for row in report.rows() {
            let folds = row.mean_accuracy * m as f64 / 100.0;
            assert!(
                (folds - folds.round()).abs() < 1e-9,
                "accuracy {} is not a whole number of folds",
                row.mean_accuracy
            );
            assert!((0.0..=100.0).contains(&row.mean_accuracy));
            assert_eq!(row.std_accuracy, 0.0);
        }
    }

    #[test]
    fn full_subset_reproduces_the_unrestricted_classifier_exactly() {
        let ds = random_dataset(12, 6, 0xAB);
        let cfg = selector();
        let m = ds.n_instances() as u32;

        // Unrestricted: train on every stored feature of each fold directly.
        let mut unrestricted_correct = 0usize;
        for (fold, i) in (0..m).enumerate() {
            let train: Vec<u32> = (0..m).filter(|&j| j != i).collect();
            let sub = ds.subset_instances(&train).unwrap();
            let (norm, report) = sub.normalized(cfg.norm).unwrap();
            let positions: Vec<usize> = (0..norm.feature_ids().len()).collect();
            let rows = norm.rows_for_positions(&positions);
            let labels = norm.binary_labels().unwrap();
            let svm_cfg = SvmConfig {
                seed: derive_seed(SVM_SEED_BASE, fold as u64),
                ..SvmConfig::default()
            };
            let model = train_linear_svm(&rows, &labels, positions.len(), &svm_cfg).unwrap();
            let raw = test_matrix_internal(&ds, &[i], norm.feature_ids());
            let row: Vec<(u32, f64)> = positions
                .iter()
                .map(|&p| (p as u32, report.transform(p, raw[0][p])))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            let y = if ds.labels()[i as usize] > 0.0 { 1.0 } else { -1.0 };
            if model.predict(&row) == y {
                unrestricted_correct += 1;
            }
        }
        let unrestricted = 100.0 * unrestricted_correct as f64 / m as f64;

        let report = evaluate(
            &ds,
            SelectionMode::PerFold(&cfg),
            &[6],
            &EvalProtocol::Loocv,
            1.0,
        )
        .unwrap();
        assert_eq!(report.rows()[0].mean_accuracy, unrestricted);
    }

    #[test]
    fn oversized_and_exact_subsets_train_identical_models() {
        let ds = random_dataset(10, 5, 0x51);
        let cfg = selector();
        let train: Vec<u32> = (0..8).collect();
        let test: Vec<u32> = vec![8, 9];
        let a = run_fold(&ds, &train, &test, SelectionMode::PerFold(&cfg), 5, 1.0).unwrap();
        let b = run_fold(&ds, &train, &test, SelectionMode::PerFold(&cfg), 50, 1.0).unwrap();
        assert_eq!(a.selected, b.selected);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.n_correct, b.n_correct);
    }

    #[test]
    fn test_rows_cannot_influence_training_artifacts() {
        let m = 10usize;
        let base = random_dataset(m, 6, 0xC4);
        // Clone the dataset but corrupt the two test rows' values and labels.
        let mut entries = Vec::new();
        for pos in 0..base.feature_ids().len() {
            let id = base.feature_ids()[pos];
            let (rows, vals) = base.column(pos);
            for (&r, &v) in rows.iter().zip(vals) {
                let v = if r >= 8 { -3.0 * v + 0.5 } else { v };
                entries.push((r, id, v));
            }
        }
        let mut labels = base.labels().to_vec();
        labels[8] = -labels[8];
        labels[9] = -labels[9];
        let corrupted = SparseDataset::from_entries(m, 6, &entries, labels).unwrap();

        let cfg = selector();
        let train: Vec<u32> = (0..8).collect();
        let test: Vec<u32> = vec![8, 9];
        let a = run_fold(&base, &train, &test, SelectionMode::PerFold(&cfg), 3, 1.0).unwrap();
        let b = run_fold(&corrupted, &train, &test, SelectionMode::PerFold(&cfg), 3, 1.0).unwrap();
        assert_eq!(a.selected, b.selected);
        assert_eq!(a.weights, b.weights, "training artifacts drifted with test-side changes");
        assert_eq!(a.degenerate, b.degenerate);
    }

    #[test]
    fn single_class_training_fold_degrades_to_majority() {
        // Three positive instances, one negative.
        let entries = vec![
            (0u32, 0u32, 1.0),
            (1, 0, 0.8),
            (2, 0, 1.2),
            (3, 0, -1.0),
            (0, 1, 0.3),
            (1, 1, -0.2),
            (2, 1, 0.1),
            (3, 1, 0.4),
        ];
        let ds = SparseDataset::from_entries(4, 2, &entries, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        let cfg = selector();
        // Train on the three positives; the lone negative is the test row.
        let art = run_fold(&ds, &[0, 1, 2], &[3], SelectionMode::PerFold(&cfg), 1, 1.0).unwrap();
        assert!(art.degenerate);
        assert_eq!(art.weights, vec![1.0]);
        assert_eq!(art.n_correct, 0);

        // The full protocol still runs and flags the degenerate folds.
        let report = evaluate(
            &ds,
            SelectionMode::PerFold(&cfg),
            &[1],
            &EvalProtocol::Loocv,
            1.0,
        )
        .unwrap();
        assert!(report.n_degenerate_folds() >= 1);
        assert!((0.0..=100.0).contains(&report.rows()[0].mean_accuracy));
    }

    #[test]
    fn whole_data_mode_applies_one_fixed_ranking() {
        let ds = signal_dataset(10);
        let cfg = selector();
        let (ranking, solution) = whole_data_ranking(&ds, &cfg).unwrap();
        assert_eq!(solution.status, crate::solvers::SolveStatus::Converged);
        let report = evaluate(
            &ds,
            SelectionMode::Whole {
                ranking: &ranking,
                norm: cfg.norm,
            },
            &[1],
            &EvalProtocol::Loocv,
            1.0,
        )
        .unwrap();
        assert_eq!(report.selection(), "whole_data");
        assert_eq!(report.rows()[0].mean_accuracy, 100.0);
    }

    #[test]
    fn best_row_prefers_the_smallest_size_on_ties() {
        let ds = signal_dataset(10);
        let cfg = selector();
        let report = evaluate(
            &ds,
            SelectionMode::PerFold(&cfg),
            &[1, 2, 3],
            &EvalProtocol::Loocv,
            1.0,
        )
        .unwrap();
        let best = report.best();
        let max = report
            .rows()
            .iter()
            .map(|r| r.mean_accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.mean_accuracy, max);
        for row in report.rows() {
            if row.mean_accuracy == max {
                assert!(best.k <= row.k);
            }
        }
    }

    #[test]
    fn identical_runs_produce_identical_reports() {
        let ds = random_dataset(14, 8, 0x77);
        let cfg = selector();
        let protocol = EvalProtocol::RandomSplits {
            n_repeats: 3,
            test_fraction: 0.3,
            seed: 21,
        };
        let a = evaluate(&ds, SelectionMode::PerFold(&cfg), &[2, 4], &protocol, 1.0).unwrap();
        let b = evaluate(&ds, SelectionMode::PerFold(&cfg), &[2, 4], &protocol, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let ds = signal_dataset(6);
        let cfg = selector();
        let mode = SelectionMode::PerFold(&cfg);
        // Normalized input.
        let (norm, _) = ds.normalized(NormMode::UnitNorm).unwrap();
        assert!(evaluate(&norm, mode, &[1], &EvalProtocol::Loocv, 1.0).is_err());
        // Bad subset-size grids.
        assert!(evaluate(&ds, mode, &[], &EvalProtocol::Loocv, 1.0).is_err());
        assert!(evaluate(&ds, mode, &[0, 1], &EvalProtocol::Loocv, 1.0).is_err());
        assert!(evaluate(&ds, mode, &[2, 2], &EvalProtocol::Loocv, 1.0).is_err());
        assert!(evaluate(&ds, mode, &[3, 1], &EvalProtocol::Loocv, 1.0).is_err());
        // Bad classifier cost.
        assert!(evaluate(&ds, mode, &[1], &EvalProtocol::Loocv, 0.0).is_err());
        // Bad protocols.
        let bad_fraction = EvalProtocol::RandomSplits {
            n_repeats: 2,
            test_fraction: 1.0,
            seed: 0,
        };
        assert!(evaluate(&ds, mode, &[1], &bad_fraction, 1.0).is_err());
        let no_repeats = EvalProtocol::RandomSplits {
            n_repeats: 0,
            test_fraction: 0.5,
            seed: 0,
        };
        assert!(evaluate(&ds, mode, &[1], &no_repeats, 1.0).is_err());
        // Degenerate trade-off values cannot prescale relevance.
        let bad_theta = SelectorConfig {
            solver: SolverConfig {
                theta: 1.0,
                ..SolverConfig::default()
            },
            ..SelectorConfig::default()
        };
        assert!(evaluate(&ds, SelectionMode::PerFold(&bad_theta), &[1], &EvalProtocol::Loocv, 1.0)
            .is_err());
    }

    #[test]
    fn loocv_is_gated_by_its_work_budget() {
        assert!(check_loocv_budget(20, 200, 4000).is_ok());
        match check_loocv_budget(20, 201, 4000) {
            Err(Error::Capacity(_)) => {}
            other => panic!("expected a capacity error, got {other:?}"),
        }
        // Saturating product: enormous inputs refuse instead of wrapping.
        assert!(check_loocv_budget(usize::MAX, usize::MAX, usize::MAX - 1).is_err());
    }

    #[test]
    fn single_cell_sweep_matches_evaluate() {
        let ds = signal_dataset(8);
        let cfg = selector();
        let protocol = EvalProtocol::Loocv;
        let sweep = sweep_gamma(&ds, &[cfg.solver.gamma], &[1], &protocol, &cfg, 1.0, false).unwrap();
        let single = evaluate(&ds, SelectionMode::PerFold(&cfg), &[1], &protocol, 1.0).unwrap();
        assert_eq!(sweep.rows().len(), 1);
        assert_eq!(sweep.rows()[0].gamma, cfg.solver.gamma);
        assert_eq!(sweep.rows()[0].k, 1);
        assert_eq!(sweep.rows()[0].mean_accuracy, single.rows()[0].mean_accuracy);
        assert_eq!(sweep.rows()[0].std_accuracy, single.rows()[0].std_accuracy);
    }

    #[test]
    fn sweep_is_a_full_factorial_in_row_major_order() {
        let ds = signal_dataset(8);
        let cfg = selector();
        let gammas = [0.5, 2.0];
        let ks = [1, 2, 3];
        let sweep = sweep_gamma(&ds, &gammas, &ks, &EvalProtocol::Loocv, &cfg, 1.0, false).unwrap();
        assert_eq!(sweep.rows().len(), 6);
        let mut i = 0;
        for &g in &gammas {
            for &k in &ks {
                assert_eq!(sweep.rows()[i].gamma, g);
                assert_eq!(sweep.rows()[i].k, k);
                i += 1;
            }
        }
        let mut csv = Vec::new();
        sweep.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let data_lines = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("gamma"))
            .count();
        assert_eq!(data_lines, 6);
    }

    #[test]
    fn report_serializes_to_tsv_and_json() {
        let ds = signal_dataset(8);
        let cfg = selector();
        let report = evaluate(
            &ds,
            SelectionMode::PerFold(&cfg),
            &[1, 2],
            &EvalProtocol::Loocv,
            1.0,
        )
        .unwrap();
        let mut tsv = Vec::new();
        report.write_tsv(&mut tsv).unwrap();
        let text = String::from_utf8(tsv).unwrap();
        assert!(text.contains("# kind: eval_report"));
        assert!(text.contains("# protocol: loocv"));
        assert!(text.contains("# best_k: 1"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);

        let value = report.to_json();
        assert_eq!(value["kind"], "eval_report");
        assert_eq!(value["rows"].as_array().unwrap().len(), 2);
        assert_eq!(value["rows"][0]["k"], 1);
    }
}
