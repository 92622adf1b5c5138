//! Coordinate descent on the box-constrained feature dual.
//!
//! Minimizes `0.5*a'Qa + (gamma/2)*(sum a)^2 - r~'a` over `0 <= a_i <= C`,
//! where `Q_ij = f_i . f_j` over normalized feature columns. The quadratic
//! couples coordinates only through the primal accumulator `w = sum a_p f_p`
//! and the scalar mass `s = sum a_p`, so each coordinate visit costs one
//! sparse column dot plus one sparse axpy and a full sweep costs O(nnz).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{primal_objective, DualSolution, SolveObserver, SolveStatus, SolverConfig};
use crate::dataset::{NormState, SparseDataset};
use crate::error::{Error, Result};
use crate::metrics::RelevanceVector;

/// Coordinate steps smaller than this leave the iterate untouched.
const STEP_FLOOR: f64 = 1e-12;

/// Solves the box dual for `dataset` against `relevance`, which must score
/// exactly the stored columns (pre-scaled by any trade-off factor). Returns
/// the converged weights together with the primal witness `w`, the implied
/// bias `gamma * sum_alpha`, and both objective values.
pub fn mmfs_dcd(
    dataset: &SparseDataset,
    relevance: &RelevanceVector,
    config: &SolverConfig,
) -> Result<DualSolution> {
    mmfs_dcd_observed(dataset, relevance, config, &mut ())
}

/// [`mmfs_dcd`] with per-update and per-sweep hooks.
pub fn mmfs_dcd_observed(
    dataset: &SparseDataset,
    relevance: &RelevanceVector,
    config: &SolverConfig,
    observer: &mut dyn SolveObserver,
) -> Result<DualSolution> {
    config.validate()?;
    if dataset.norm_state() == NormState::Raw {
        return Err(Error::State(
            "solver needs a normalized dataset; call normalized() first".into(),
        ));
    }
    let n = dataset.n_stored_columns();
    if relevance.values().len() != n || relevance.feature_ids() != dataset.feature_ids() {
        return Err(Error::Shape(format!(
            "relevance scores {} columns, dataset stores {n}",
            relevance.values().len()
        )));
    }

    let c = config.c;
    let gamma = config.gamma;
    let eps = config.eps;
    let r = relevance.values();
    let diag: Vec<f64> = (0..n).map(|p| dataset.col_norm_sq(p)).collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; dataset.n_instances()];
    let mut s = 0.0f64;

    let mut index: Vec<u32> = (0..n as u32).collect();
    let mut active = n;
    let mut pgmax_old = f64::INFINITY;
    let mut pgmin_old = f64::NEG_INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let mut sweeps: u32 = 0;
    let mut status = SolveStatus::MaxSweeps;
    let mut violation = f64::INFINITY;

    'solve: while sweeps < config.max_sweeps {
        let mut pgmax_new = f64::NEG_INFINITY;
        let mut pgmin_new = f64::INFINITY;

        for i in 0..active {
            let j = i + rng.random_range(0..active - i);
            index.swap(i, j);
        }

        let mut k = 0usize;
        while k < active {
            let p = index[k] as usize;
            let g = dataset.col_dot(p, &w) + gamma * s - r[p];
            if !g.is_finite() {
                status = SolveStatus::Diverged;
                break 'solve;
            }
            let a = alpha[p];
            let mut pg = 0.0f64;
            if a == 0.0 {
                if config.shrinking && g > pgmax_old {
                    active -= 1;
                    index.swap(k, active);
                    continue;
                }
                if g < 0.0 {
                    pg = g;
                }
            } else if a == c {
                if config.shrinking && g < pgmin_old {
                    active -= 1;
                    index.swap(k, active);
                    continue;
                }
                if g > 0.0 {
                    pg = g;
                }
            } else {
                pg = g;
            }
            if pg > pgmax_new {
                pgmax_new = pg;
            }
            if pg < pgmin_new {
                pgmin_new = pg;
            }

            if pg.abs() > STEP_FLOOR {
                let next = (a - g / (diag[p] + gamma)).clamp(0.0, c);
                let delta = next - a;
                if delta != 0.0 {
                    let step_obj = delta * g + 0.5 * delta * delta * (diag[p] + gamma);
                    debug_assert!(
                        step_obj <= 1e-12,
                        "coordinate step raised the objective by {step_obj:e}"
                    );
                    debug_assert!((0.0..=c).contains(&next), "weight {next} escaped the box");
                    alpha[p] = next;
                    dataset.col_axpy(p, delta, &mut w);
                    s += delta;
                    observer.on_update(step_obj);
                }
            }
            k += 1;
        }
        sweeps += 1;

        if sweeps % 100 == 0 {
            rebuild(dataset, &alpha, &mut w, &mut s);
        }
        observer.on_sweep(sweeps, &alpha, &w, s);

        let settled = active == 0
            || (pgmax_new - pgmin_new <= eps
                && pgmax_new.abs() <= eps
                && pgmin_new.abs() <= eps);
        if settled {
            if active < n {
                active = n;
                pgmax_old = f64::INFINITY;
                pgmin_old = f64::NEG_INFINITY;
                continue;
            }
            // In-sweep measurements interleave with updates, so re-certify
            // the finished iterate against a freshly accumulated w before
            // declaring optimality.
            rebuild(dataset, &alpha, &mut w, &mut s);
            violation = worst_violation(dataset, r, &alpha, &w, s, gamma, c);
            if violation <= eps {
                status = SolveStatus::Converged;
                break;
            }
            pgmax_old = f64::INFINITY;
            pgmin_old = f64::NEG_INFINITY;
        } else {
            pgmax_old = if pgmax_new <= 0.0 { f64::INFINITY } else { pgmax_new };
            pgmin_old = if pgmin_new >= 0.0 { f64::NEG_INFINITY } else { pgmin_new };
        }
    }

    let (dual, primal) = if status == SolveStatus::Diverged {
        (f64::NAN, None)
    } else {
        if status == SolveStatus::MaxSweeps {
            rebuild(dataset, &alpha, &mut w, &mut s);
            violation = worst_violation(dataset, r, &alpha, &w, s, gamma, c);
        }
        let w_norm_sq: f64 = w.iter().map(|v| v * v).sum();
        let r_dot: f64 = alpha.iter().zip(r).map(|(a, ri)| a * ri).sum();
        let dual = 0.5 * w_norm_sq + 0.5 * gamma * s * s - r_dot;
        let primal = primal_objective(&w, gamma * s, dataset, relevance, config)?;
        (dual, Some(primal))
    };

    Ok(DualSolution {
        alpha,
        feature_ids: dataset.feature_ids().to_vec(),
        w: Some(w),
        bias: gamma * s,
        dual_objective: dual,
        primal_objective: primal,
        sweeps_used: sweeps,
        max_pg_violation: violation,
        status,
        sum_alpha: s,
    })
}

/// Reaccumulates `w` and `s` from alpha, discarding incremental drift.
fn rebuild(dataset: &SparseDataset, alpha: &[f64], w: &mut [f64], s: &mut f64) {
    w.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    for (pos, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            dataset.col_axpy(pos, a, w);
            total += a;
        }
    }
    *s = total;
}

/// Largest projected-gradient magnitude over every stored column, evaluated
/// without touching the iterate. Columns the dataset never stored have zero
/// data and zero relevance, so their weight 0 is optimal whenever `s >= 0`
/// and they need no check.
fn worst_violation(
    dataset: &SparseDataset,
    r: &[f64],
    alpha: &[f64],
    w: &[f64],
    s: f64,
    gamma: f64,
    c: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for (pos, &a) in alpha.iter().enumerate() {
        let g = dataset.col_dot(pos, w) + gamma * s - r[pos];
        if !g.is_finite() {
            return f64::INFINITY;
        }
        let pg = if a == 0.0 {
            g.min(0.0)
        } else if a == c {
            g.max(0.0)
        } else {
            g
        };
        worst = worst.max(pg.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NormMode;
    use crate::metrics::correlation_relevance;
    use crate::solvers::dual_objective;
    use crate::test_util::random_dataset;

    fn tight(eps: f64) -> SolverConfig {
        SolverConfig { eps, max_sweeps: 20_000, ..Default::default() }
    }

    fn one_column() -> SparseDataset {
        let entries = [(0, 0, 1.0), (1, 0, 2.0), (2, 0, 4.0), (3, 0, 0.5)];
        let labels = vec![1.0, -1.0, 1.0, -1.0];
        SparseDataset::from_entries(4, 1, &entries, labels)
            .unwrap()
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0
    }

    #[test]
    fn single_column_closed_form() {
        let ds = one_column();
        let rel = RelevanceVector::from_values(vec![1.0]);
        let sol = mmfs_dcd(&ds, &rel, &tight(1e-10)).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.alpha[0] - 0.5).abs() <= 1e-9, "alpha {}", sol.alpha[0]);
        assert!(
            (sol.dual_objective + 0.25).abs() <= 1e-9,
            "objective {}",
            sol.dual_objective
        );
        assert!((sol.bias - 0.5).abs() <= 1e-9);
        // zero duality gap at the optimum
        let gap = sol.primal_objective.unwrap() + sol.dual_objective;
        assert!(gap.abs() <= 1e-6, "gap {gap}");
    }

    #[test]
    fn duplicated_column_pair_matches_reduced_problem() {
        let base = [1.0, 2.0, 4.0, 0.5];
        let mut entries = Vec::new();
        for (i, &v) in base.iter().enumerate() {
            entries.push((i as u32, 0u32, v));
            entries.push((i as u32, 1u32, v));
        }
        let labels = vec![1.0, -1.0, 1.0, -1.0];
        let ds = SparseDataset::from_entries(4, 2, &entries, labels)
            .unwrap()
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = RelevanceVector::from_values(vec![1.2, 1.2]);
        let sol = mmfs_dcd(&ds, &rel, &tight(1e-10)).unwrap();
        // With identical unit columns only the total mass matters:
        // minimize s^2 - 1.2 s over 0 <= s <= 2  =>  s = 0.6, value -0.36.
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.sum_alpha - 0.6).abs() <= 1e-8, "mass {}", sol.sum_alpha);
        assert!(
            (sol.dual_objective + 0.36).abs() <= 1e-8,
            "objective {}",
            sol.dual_objective
        );
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let ds = random_dataset(15, 8, 3)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let cfg = tight(1e-8);
        let a = mmfs_dcd(&ds, &rel, &cfg).unwrap();
        let b = mmfs_dcd(&ds, &rel, &cfg).unwrap();
        assert_eq!(a.sweeps_used, b.sweeps_used);
        assert_eq!(a.dual_objective.to_bits(), b.dual_objective.to_bits());
        for (x, y) in a.alpha.iter().zip(&b.alpha) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn shrinking_does_not_change_the_answer() {
        let ds = random_dataset(20, 10, 17)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let on = mmfs_dcd(&ds, &rel, &tight(1e-8)).unwrap();
        let off = mmfs_dcd(
            &ds,
            &rel,
            &SolverConfig { shrinking: false, ..tight(1e-8) },
        )
        .unwrap();
        assert_eq!(on.status, SolveStatus::Converged);
        assert_eq!(off.status, SolveStatus::Converged);
        assert!(
            (on.dual_objective - off.dual_objective).abs() <= 1e-8,
            "{} vs {}",
            on.dual_objective,
            off.dual_objective
        );
    }

    #[test]
    fn heavier_mass_penalty_shrinks_total_mass() {
        let ds = random_dataset(18, 9, 29)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let mut last = f64::INFINITY;
        for gamma in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let cfg = SolverConfig { gamma, ..tight(1e-10) };
            let sol = mmfs_dcd(&ds, &rel, &cfg).unwrap();
            assert_eq!(sol.status, SolveStatus::Converged);
            assert!(
                sol.sum_alpha <= last + 1e-8,
                "mass grew from {last} to {} at gamma {gamma}",
                sol.sum_alpha
            );
            last = sol.sum_alpha;
        }
    }

    #[test]
    fn budget_exhaustion_reports_partial_state() {
        let ds = random_dataset(25, 12, 5)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let cfg = SolverConfig { eps: 1e-14, max_sweeps: 1, ..Default::default() };
        let sol = mmfs_dcd(&ds, &rel, &cfg).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxSweeps);
        assert_eq!(sol.sweeps_used, 1);
        assert!(sol.max_pg_violation.is_finite());
        assert!(sol.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn non_finite_relevance_flags_divergence() {
        let ds = one_column();
        let rel = RelevanceVector::from_values(vec![f64::INFINITY]);
        let sol = mmfs_dcd(&ds, &rel, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Diverged);
        assert!(sol.dual_objective.is_nan());
        assert!(sol.primal_objective.is_none());
    }

    #[test]
    fn raw_dataset_is_rejected() {
        let raw = random_dataset(6, 3, 1);
        let rel = RelevanceVector::from_values(vec![0.5, 0.5, 0.5]);
        let err = mmfs_dcd(&raw, &rel, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn misaligned_relevance_is_rejected() {
        let ds = random_dataset(6, 3, 1)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = RelevanceVector::from_values(vec![0.5, 0.5]);
        let err = mmfs_dcd(&ds, &rel, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn witness_matches_weight_combination() {
        let ds = random_dataset(14, 7, 13)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let sol = mmfs_dcd(&ds, &rel, &tight(1e-8)).unwrap();
        let mut expect = vec![0.0f64; 14];
        for (pos, &a) in sol.alpha.iter().enumerate() {
            ds.col_axpy(pos, a, &mut expect);
        }
        let w = sol.w.as_ref().unwrap();
        for (got, want) in w.iter().zip(&expect) {
            assert!((got - want).abs() <= 1e-12);
        }
        assert_eq!(sol.bias, sol.sum_alpha * 1.0);
    }

    #[test]
    fn reported_objective_matches_direct_evaluation() {
        let ds = random_dataset(16, 9, 41)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let cfg = tight(1e-8);
        let sol = mmfs_dcd(&ds, &rel, &cfg).unwrap();
        let direct = dual_objective(&sol.alpha, &ds, &rel, cfg.gamma).unwrap();
        assert!((sol.dual_objective - direct).abs() <= 1e-10);
    }

    #[test]
    fn observer_sees_monotone_updates_and_every_sweep() {
        struct Watcher {
            updates: usize,
            sweeps: u32,
            worst_rise: f64,
        }
        impl SolveObserver for Watcher {
            fn on_update(&mut self, delta: f64) {
                self.updates += 1;
                self.worst_rise = self.worst_rise.max(delta);
            }
            fn on_sweep(&mut self, sweep: u32, alpha: &[f64], w: &[f64], sum_alpha: f64) {
                self.sweeps = sweep;
                assert!(alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
                assert_eq!(w.len(), 20);
                assert!(sum_alpha >= 0.0);
            }
        }
        let ds = random_dataset(20, 10, 23)
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        let mut watcher = Watcher { updates: 0, sweeps: 0, worst_rise: f64::NEG_INFINITY };
        let sol = mmfs_dcd_observed(&ds, &rel, &tight(1e-8), &mut watcher).unwrap();
        assert!(watcher.updates > 0);
        assert_eq!(watcher.sweeps, sol.sweeps_used);
        assert!(watcher.worst_rise <= 1e-12, "objective rose by {}", watcher.worst_rise);
    }

    #[test]
    fn centered_constant_column_keeps_zero_weight() {
        let entries = [
            (0, 0, 5.0), (1, 0, 5.0), (2, 0, 5.0), (3, 0, 5.0),
            (0, 1, 1.0), (1, 1, -1.0), (2, 1, 2.0), (3, 1, -2.0),
        ];
        let labels = vec![1.0, -1.0, 1.0, -1.0];
        let ds = SparseDataset::from_entries(4, 2, &entries, labels)
            .unwrap()
            .normalized(NormMode::CenteredUnitNorm)
            .unwrap()
            .0;
        let rel = correlation_relevance(&ds).unwrap();
        assert_eq!(rel.values()[0], 0.0);
        let sol = mmfs_dcd(&ds, &rel, &tight(1e-10)).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert_eq!(sol.alpha[0], 0.0);
        assert!(sol.alpha[1] > 0.0);
    }
}
