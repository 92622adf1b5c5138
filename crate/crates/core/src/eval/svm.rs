//! Linear binary classifier used for downstream evaluation.
//!
//! Squared-hinge SVM trained in the dual by coordinate descent: each
//! coordinate owns one training instance, the upper bound is open, and the
//! diagonal carries the extra `1/(2C)` term that the squared loss induces.
//! The bias is learned as the weight of an appended constant-one feature,
//! so the returned weight vector has one slot more than the feature count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Updates below this magnitude are skipped as numerical noise.
const STEP_FLOOR: f64 = 1e-12;

/// Training knobs for [`train_linear_svm`].
#[derive(Clone, Debug, PartialEq)]
pub struct SvmConfig {
    /// Misclassification weight; the per-instance loss is `C * max(0, 1 - y f(x))^2`.
    pub c: f64,
    /// Stopping threshold on the projected-gradient range of one pass.
    pub tol: f64,
    /// Hard cap on full passes over the training set.
    pub max_sweeps: u32,
    /// Seed for the per-sweep visiting order.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, tol: 0.1, max_sweeps: 1000, seed: 7 }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "classifier cost must be positive and finite, got {}",
                self.c
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "classifier tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("classifier sweep budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// A trained linear model over `n_features` inputs plus a trailing bias slot.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm {
    /// `n_features + 1` weights; the last entry multiplies a constant one.
    pub weights: Vec<f64>,
    /// True when training saw a single class and fell back to a constant
    /// majority predictor (all weights zero, bias set to the majority sign).
    pub degenerate: bool,
    /// Final dual objective value; `NaN` for degenerate models.
    pub dual_objective: f64,
    /// Full passes actually performed.
    pub sweeps_used: u32,
}

impl LinearSvm {
    /// Decision value for a sparse row of `(feature_index, value)` pairs.
    pub fn decision(&self, row: &[(u32, f64)]) -> f64 {
        decision_value(&self.weights, row)
    }

    /// Predicted label in `{-1.0, +1.0}`; a zero decision value maps to `+1`.
    pub fn predict(&self, row: &[(u32, f64)]) -> f64 {
        if self.decision(row) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Decision value `w . x + b` for a sparse row against a weight vector whose
/// last entry is the bias.
pub fn decision_value(weights: &[f64], row: &[(u32, f64)]) -> f64 {
    debug_assert!(!weights.is_empty());
    let mut score = weights[weights.len() - 1];
    for &(j, v) in row {
        score += weights[j as usize] * v;
    }
    score
}

/// Trains an L2-regularized squared-hinge SVM on sparse instance rows.
///
/// `rows[i]` lists `(feature_index, value)` pairs with indices below
/// `n_features`; `labels[i]` must be `+1.0` or `-1.0`. A single-class input
/// yields a flagged majority predictor instead of an error so that tiny
/// cross-validation folds degrade gracefully.
pub fn train_linear_svm(
    rows: &[Vec<(u32, f64)>],
    labels: &[f64],
    n_features: usize,
    config: &SvmConfig,
) -> Result<LinearSvm> {
    config.validate()?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument("cannot train a classifier on zero instances".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for &y in labels {
        if y == 1.0 {
            n_pos += 1;
        } else if y == -1.0 {
            n_neg += 1;
        } else {
            return Err(Error::InvalidArgument(format!(
                "labels must be +1 or -1, got {y}"
            )));
        }
    }
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            if (j as usize) >= n_features {
                return Err(Error::Shape(format!(
                    "row {i} references feature {j} outside 0..{n_features}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite value in row {i}"
                )));
            }
        }
    }

    if n_pos == 0 || n_neg == 0 {
        // Majority predictor; ties between counts cannot happen here but the
        // positive class wins them by convention elsewhere too.
        let majority = if n_pos >= n_neg { 1.0 } else { -1.0 };
        let mut weights = vec![0.0; n_features + 1];
        weights[n_features] = majority;
        return Ok(LinearSvm {
            weights,
            degenerate: true,
            dual_objective: f64::NAN,
            sweeps_used: 0,
        });
    }

    let m = rows.len();
    let inv_2c = 1.0 / (2.0 * config.c);
    // Diagonal of the dual Hessian: |x_i|^2 + 1 (bias feature) + 1/(2C).
    let diag: Vec<f64> = rows
        .iter()
        .map(|row| row.iter().map(|&(_, v)| v * v).sum::<f64>() + 1.0 + inv_2c)
        .collect();

    let mut alpha = vec![0.0f64; m];
    let mut weights = vec![0.0f64; n_features + 1];
    let bias_slot = n_features;
    let mut index: Vec<u32> = (0..m as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut sweeps = 0u32;
    while sweeps < config.max_sweeps {
        for i in 0..m {
            let j = i + rng.random_range(0..m - i);
            index.swap(i, j);
        }
        let mut pgmax = f64::NEG_INFINITY;
        let mut pgmin = f64::INFINITY;
        for &raw in &index {
            let i = raw as usize;
            let y = labels[i];
            let g = y * decision_value(&weights, &rows[i]) - 1.0 + alpha[i] * inv_2c;
            let pg = if alpha[i] == 0.0 { g.min(0.0) } else { g };
            if pg > pgmax {
                pgmax = pg;
            }
            if pg < pgmin {
                pgmin = pg;
            }
            if pg.abs() > STEP_FLOOR {
                let next = (alpha[i] - g / diag[i]).max(0.0);
                let delta = next - alpha[i];
                if delta != 0.0 {
                    alpha[i] = next;
                    let scaled = delta * y;
                    for &(j, v) in &rows[i] {
                        weights[j as usize] += scaled * v;
                    }
                    weights[bias_slot] += scaled;
                }
            }
        }
        sweeps += 1;
        if pgmax - pgmin <= config.tol {
            break;
        }
    }

    let sum_alpha: f64 = alpha.iter().sum();
    let sum_alpha_sq: f64 = alpha.iter().map(|a| a * a).sum();
    let norm_sq: f64 = weights.iter().map(|w| w * w).sum();
    let dual_objective = 0.5 * norm_sq + 0.5 * inv_2c * sum_alpha_sq - sum_alpha;

    Ok(LinearSvm {
        weights,
        degenerate: false,
        dual_objective,
        sweeps_used: sweeps,
    })
}
