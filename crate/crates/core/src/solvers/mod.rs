//! Dual solvers for margin-based feature weighting.
//!
//! Two paths share the [`DualSolution`] result type. [`mmfs_dcd`] runs
//! coordinate descent over the box-constrained dual of the feature margin
//! problem, touching only stored entries, so one sweep costs O(nnz). It is
//! the path of choice for large sparse data with the linear kernel.
//! [`constrained_qp_solve`] runs projected gradient on the simplex-box dual
//! over an explicit Gram matrix; it handles arbitrary kernels and doubles as
//! a correlation/MI quadratic-program selector, at O(N^2) per iteration.

mod dcd;
mod qp;

pub use dcd::{mmfs_dcd, mmfs_dcd_observed};
pub use qp::{constrained_qp_solve, project_box_simplex, DEFAULT_QP_TOL};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::SparseDataset;
use crate::error::{Error, Result};
use crate::metrics::RelevanceVector;

/// Tunables shared by both solver paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Upper bound of the box constraint on every dual weight.
    pub c: f64,
    /// Strength of the squared-sum penalty; also sets the bias scale on the
    /// coordinate-descent path.
    pub gamma: f64,
    /// Relevance/redundancy trade-off carried alongside the solver settings;
    /// consumed when relevance scores are scaled, or directly by the
    /// simplex-box path.
    pub theta: f64,
    /// Stopping tolerance on the worst projected-gradient entry.
    pub eps: f64,
    /// Sweep budget before giving up.
    pub max_sweeps: u32,
    /// Freeze coordinates pinned at a bound whose gradient keeps them there.
    pub shrinking: bool,
    /// Seed for the per-sweep visit order.
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 1.0,
            gamma: 1.0,
            theta: 0.5,
            eps: 1e-3,
            max_sweeps: 1000,
            shrinking: true,
            rng_seed: 42,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c <= 0.0 || !self.c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "box bound must be positive and finite, got {}",
                self.c
            )));
        }
        if self.gamma <= 0.0 || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        if self.eps <= 0.0 || !self.eps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "eps must be positive and finite, got {}",
                self.eps
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument(
                "max_sweeps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// The optimality certificate held over every coordinate.
    Converged,
    /// The sweep budget ran out first; the iterate is still feasible.
    MaxSweeps,
    /// A gradient went non-finite; the iterate is unusable.
    Diverged,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxSweeps => "max_sweeps",
            SolveStatus::Diverged => "diverged",
        };
        f.write_str(s)
    }
}

/// Hooks into the coordinate-descent loop, for callers that want to watch a
/// solve without paying for it when they don't. All methods default to no-ops;
/// `()` is the silent observer.
pub trait SolveObserver {
    /// Called after every accepted coordinate step with the exact change of
    /// the dual objective (non-positive up to rounding).
    fn on_update(&mut self, delta_objective: f64) {
        let _ = delta_objective;
    }

    /// Called after every sweep with the current iterate. `w` is the
    /// maintained primal accumulator and `sum_alpha` the running weight mass.
    fn on_sweep(&mut self, sweep: u32, alpha: &[f64], w: &[f64], sum_alpha: f64) {
        let _ = (sweep, alpha, w, sum_alpha);
    }
}

impl SolveObserver for () {}

/// Result of either solver path.
///
/// `alpha` holds one weight per stored column, aligned with `feature_ids`
/// (logical, 0-based). Columns the dataset never stored carry an implicit
/// weight of zero. On the coordinate-descent path `w` is the primal witness
/// and `bias` equals `gamma * sum_alpha`; on the simplex-box path `w` is
/// absent and `bias` is the multiplier of the sum-to-one constraint.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub feature_ids: Vec<u32>,
    pub w: Option<Vec<f64>>,
    pub bias: f64,
    pub dual_objective: f64,
    pub primal_objective: Option<f64>,
    pub sweeps_used: u32,
    pub max_pg_violation: f64,
    pub status: SolveStatus,
    pub sum_alpha: f64,
}

impl DualSolution {
    /// Number of strictly positive weights.
    pub fn n_active(&self) -> usize {
        self.alpha.iter().filter(|&&a| a > 0.0).count()
    }

    /// Serializes the solution with its config echo. Weights are written
    /// sparsely (nonzeros only) against 1-based feature ids; the dense `w`
    /// vector is included only on request.
    pub fn to_json(&self, config: &SolverConfig, include_w: bool) -> serde_json::Value {
        let alpha: Vec<serde_json::Value> = self
            .alpha
            .iter()
            .zip(&self.feature_ids)
            .filter(|(&a, _)| a != 0.0)
            .map(|(&a, &id)| serde_json::json!({ "feature": id + 1, "alpha": a }))
            .collect();
        let mut value = serde_json::json!({
            "format": crate::FORMAT_VERSION,
            "kind": "dual_solution",
            "status": self.status,
            "dual_objective": self.dual_objective,
            "primal_objective": self.primal_objective,
            "sweeps_used": self.sweeps_used,
            "max_pg_violation": self.max_pg_violation,
            "sum_alpha": self.sum_alpha,
            "bias": self.bias,
            "config": config,
            "alpha": alpha,
        });
        if include_w {
            if let Some(w) = &self.w {
                value["w"] = serde_json::json!(w);
            }
        }
        value
    }

    pub fn write_json<W: Write>(
        &self,
        out: &mut W,
        config: &SolverConfig,
        include_w: bool,
    ) -> Result<()> {
        let value = self.to_json(config, include_w);
        serde_json::to_writer_pretty(&mut *out, &value)
            .map_err(|e| Error::State(format!("serializing solution: {e}")))?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Value of the box-dual objective at `alpha`:
/// `0.5*||w||^2 + (gamma/2)*s^2 - r~.alpha` with `w = sum alpha_p f_p` and
/// `s = sum alpha_p`. One entry per stored column. Agrees with the direct
/// quadratic-form evaluation, but costs O(nnz) instead of O(N^2).
pub fn dual_objective(
    alpha: &[f64],
    dataset: &SparseDataset,
    relevance: &RelevanceVector,
    gamma: f64,
) -> Result<f64> {
    let n = dataset.n_stored_columns();
    if alpha.len() != n || relevance.values().len() != n {
        return Err(Error::Shape(format!(
            "alpha has {} entries, relevance {}, dataset stores {n} columns",
            alpha.len(),
            relevance.values().len()
        )));
    }
    let mut w = vec![0.0f64; dataset.n_instances()];
    let mut s = 0.0f64;
    let mut r_dot = 0.0f64;
    for (pos, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            dataset.col_axpy(pos, a, &mut w);
            s += a;
            r_dot += a * relevance.values()[pos];
        }
    }
    let w_norm_sq: f64 = w.iter().map(|v| v * v).sum();
    Ok(0.5 * w_norm_sq + 0.5 * gamma * s * s - r_dot)
}

/// Value of the primal margin objective at `(w, b)`:
/// `0.5*||w||^2 + b^2/(2*gamma) + C * sum_i max(r~_i - (f_i.w + b), 0)`.
/// The hinge runs over every logical feature; unstored columns contribute
/// `max(-b, 0)` each since their data and relevance are both zero.
pub fn primal_objective(
    w: &[f64],
    b: f64,
    dataset: &SparseDataset,
    relevance: &RelevanceVector,
    config: &SolverConfig,
) -> Result<f64> {
    if w.len() != dataset.n_instances() {
        return Err(Error::Shape(format!(
            "w has {} entries, dataset has {} instances",
            w.len(),
            dataset.n_instances()
        )));
    }
    let n = dataset.n_stored_columns();
    if relevance.values().len() != n {
        return Err(Error::Shape(format!(
            "relevance has {} entries, dataset stores {n} columns",
            relevance.values().len()
        )));
    }
    let mut hinge = 0.0f64;
    for pos in 0..n {
        let margin = dataset.col_dot(pos, w) + b;
        hinge += (relevance.values()[pos] - margin).max(0.0);
    }
    let unstored = dataset.n_features() as f64 - n as f64;
    hinge += unstored * (-b).max(0.0);
    let w_norm_sq: f64 = w.iter().map(|v| v * v).sum();
    Ok(0.5 * w_norm_sq + b * b / (2.0 * config.gamma) + config.c * hinge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NormMode;
    use crate::metrics::correlation_relevance;
    use crate::test_util::random_dataset;
    use rand::{Rng, SeedableRng};

    #[test]
    fn default_config_matches_documented_values() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.c, 1.0);
        assert_eq!(cfg.gamma, 1.0);
        assert_eq!(cfg.theta, 0.5);
        assert_eq!(cfg.eps, 1e-3);
        assert_eq!(cfg.max_sweeps, 1000);
        assert!(cfg.shrinking);
        assert_eq!(cfg.rng_seed, 42);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_fields() {
        let bad = [
            SolverConfig { c: 0.0, ..Default::default() },
            SolverConfig { c: -1.0, ..Default::default() },
            SolverConfig { gamma: 0.0, ..Default::default() },
            SolverConfig { gamma: f64::NAN, ..Default::default() },
            SolverConfig { eps: 0.0, ..Default::default() },
            SolverConfig { theta: 1.5, ..Default::default() },
            SolverConfig { theta: -0.1, ..Default::default() },
            SolverConfig { max_sweeps: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "accepted {cfg:?}");
        }
    }

    #[test]
    fn zero_alpha_has_zero_objective() {
        let ds = random_dataset(12, 6, 9)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let obj = dual_objective(&[0.0; 6], &ds, &rel, 1.0).unwrap();
        assert_eq!(obj, 0.0);
    }

    #[test]
    fn objective_matches_dense_quadratic_form() {
        let ds = random_dataset(15, 20, 31)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let gamma = 0.7;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let alpha: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();

        let dense = ds.to_dense().unwrap();
        let n = 20usize;
        let m = ds.n_instances();
        let col = |j: usize| (0..m).map(|i| dense[i * n + j]).collect::<Vec<f64>>();
        let cols: Vec<Vec<f64>> = (0..n).map(col).collect();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                let q_ij: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                quad += alpha[i] * alpha[j] * q_ij;
            }
        }
        let s: f64 = alpha.iter().sum();
        let r_dot: f64 = alpha.iter().zip(rel.values()).map(|(a, r)| a * r).sum();
        let direct = 0.5 * quad + 0.5 * gamma * s * s - r_dot;

        let via_w = dual_objective(&alpha, &ds, &rel, gamma).unwrap();
        assert!(
            (via_w - direct).abs() <= 1e-10,
            "via w: {via_w}, direct: {direct}"
        );
    }

    #[test]
    fn objective_shape_mismatch_rejected() {
        let ds = random_dataset(8, 4, 2)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let err = dual_objective(&[0.0; 3], &ds, &rel, 1.0).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn zero_witness_pays_full_hinge() {
        let ds = random_dataset(10, 5, 4)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let cfg = SolverConfig { c: 2.5, ..Default::default() };
        let total: f64 = rel.values().iter().sum();
        let p = primal_objective(&[0.0; 10], 0.0, &ds, &rel, &cfg).unwrap();
        assert!((p - 2.5 * total).abs() <= 1e-12, "{p} vs {}", 2.5 * total);
    }

    #[test]
    fn json_export_is_sparse_and_carries_config() {
        let sol = DualSolution {
            alpha: vec![0.0, 0.5, 0.0, 0.25],
            feature_ids: vec![0, 2, 5, 9],
            w: Some(vec![0.1, -0.2]),
            bias: 0.75,
            dual_objective: -0.5,
            primal_objective: Some(0.5),
            sweeps_used: 7,
            max_pg_violation: 1e-7,
            status: SolveStatus::Converged,
            sum_alpha: 0.75,
        };
        let cfg = SolverConfig::default();
        let v = sol.to_json(&cfg, false);
        assert_eq!(v["format"], crate::FORMAT_VERSION);
        assert_eq!(v["status"], "converged");
        let entries = v["alpha"].as_array().unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0]["feature"], 3);
        assert_eq!(entries[0]["alpha"], 0.5);
        assert_eq!(entries[1]["feature"], 10);
        assert_eq!(v["config"]["gamma"], 1.0);
        assert!(v.get("w").is_none());

        let with_w = sol.to_json(&cfg, true);
        assert_eq!(with_w["w"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn status_display_names() {
        assert_eq!(SolveStatus::Converged.to_string(), "converged");
        assert_eq!(SolveStatus::MaxSweeps.to_string(), "max_sweeps");
        assert_eq!(SolveStatus::Diverged.to_string(), "diverged");
    }
}
