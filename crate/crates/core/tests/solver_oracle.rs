//! Cross-checks of the coordinate-descent solver against dense reference
//! implementations on randomized instances.

use mmfs::{
    constrained_qp_solve, correlation_relevance, dual_objective, mmfs_dcd, mmfs_dcd_observed,
    primal_objective, GramMatrix, NormMode, SolveObserver, SolveStatus,
    SolverConfig, SparseDataset,
};
use mmfs_testkit::{box_qp_pg, random_dense, simplex_qp_enumerate, simplex_qp_objective, BoxQpOpts};
use nalgebra::DMatrix;

fn sparse_from_dense(m: usize, n: usize, seed: u64) -> SparseDataset {
    let d = random_dense(m, n, seed);
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..n {
            entries.push((i as u32, j as u32, d.get(i, j)));
        }
    }
    SparseDataset::from_entries(m, n as u32, &entries, d.labels).unwrap()
}

/// Expands every stored column of a normalized dataset to a dense vector.
fn dense_columns(ds: &SparseDataset) -> Vec<Vec<f64>> {
    (0..ds.feature_ids().len())
        .map(|pos| {
            let mut col = vec![0.0; ds.n_instances()];
            let (rows, vals) = ds.column(pos);
            for (&r, &v) in rows.iter().zip(vals) {
                col[r as usize] = v;
            }
            col
        })
        .collect()
}

fn gram_of(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols.len();
    DMatrix::from_fn(n, n, |i, j| {
        cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum()
    })
}

struct Prepared {
    norm: SparseDataset,
    relevance: mmfs::RelevanceVector,
    q: DMatrix<f64>,
}

fn prepare(m: usize, n: usize, seed: u64) -> Prepared {
    let raw = sparse_from_dense(m, n, seed);
    let (norm, _) = raw.normalized(NormMode::CenteredUnitNorm).unwrap();
    let relevance = correlation_relevance(&norm).unwrap();
    let q = gram_of(&dense_columns(&norm));
    Prepared { norm, relevance, q }
}

#[test]
fn dcd_matches_the_dense_oracle_on_random_instances() {
    let gammas = [0.5, 1.0, 2.0];
    let cs = [0.3, 1.0];
    for trial in 0u64..30 {
        let m = 5 + (trial as usize * 3) % 16;
        let n = 5 + (trial as usize * 7) % 26;
        let p = prepare(m, n, 0x0DD5 + trial);
        let gamma = gammas[trial as usize % gammas.len()];
        let c = cs[trial as usize % cs.len()];
        let config = SolverConfig {
            c,
            gamma,
            eps: 1e-8,
            max_sweeps: 100_000,
            ..SolverConfig::default()
        };
        let sol = mmfs_dcd(&p.norm, &p.relevance, &config).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged, "trial {trial}");

        let oracle = box_qp_pg(
            &p.q,
            p.relevance.values(),
            gamma,
            c,
            &BoxQpOpts {
                pg_tol: 1e-10,
                max_iter: 500_000,
                ..BoxQpOpts::default()
            },
        );
        assert!(oracle.converged, "oracle failed on trial {trial}");
        let gap = (sol.dual_objective - oracle.objective).abs();
        assert!(
            gap <= 1e-6 * (1.0 + oracle.objective.abs()),
            "trial {trial}: objective {} vs oracle {} (gap {gap:.3e})",
            sol.dual_objective,
            oracle.objective
        );
    }
}

#[test]
fn duality_gap_closes_at_the_requested_tolerance() {
    for trial in 0u64..10 {
        let p = prepare(8 + trial as usize, 6 + 2 * trial as usize, 0xD0A1 + trial);
        let config = SolverConfig {
            eps: 1e-6,
            max_sweeps: 100_000,
            ..SolverConfig::default()
        };
        let sol = mmfs_dcd(&p.norm, &p.relevance, &config).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        let primal = sol.primal_objective.unwrap();
        // The dual value of the iterate is the negated minimized objective.
        let gap = primal + sol.dual_objective;
        assert!(
            gap >= -1e-10,
            "trial {trial}: primal {primal} fell below the dual bound"
        );
        assert!(
            gap <= 1e-4 * (1.0 + sol.dual_objective.abs()),
            "trial {trial}: duality gap {gap:.3e} too wide"
        );
    }
}

struct SweepAuditor<'a> {
    dataset: &'a SparseDataset,
    relevance: &'a mmfs::RelevanceVector,
    config: &'a SolverConfig,
    sweeps_seen: u32,
    worst_gap: f64,
    worst_drift: f64,
}

impl SolveObserver for SweepAuditor<'_> {
    fn on_sweep(&mut self, sweep: u32, alpha: &[f64], w: &[f64], sum_alpha: f64) {
        self.sweeps_seen = sweep;
        // Maintained witness vs. one rebuilt from scratch.
        let mut fresh = vec![0.0; w.len()];
        for (pos, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let (rows, vals) = self.dataset.column(pos);
                for (&r, &v) in rows.iter().zip(vals) {
                    fresh[r as usize] += a * v;
                }
            }
        }
        let drift = w
            .iter()
            .zip(&fresh)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        self.worst_drift = self.worst_drift.max(drift);

        let primal = primal_objective(
            w,
            self.config.gamma * sum_alpha,
            self.dataset,
            self.relevance,
            self.config,
        )
        .unwrap();
        let dual_min = dual_objective(alpha, self.dataset, self.relevance, self.config.gamma)
            .unwrap();
        // Weak duality: any primal point sits above any dual value.
        let gap = primal + dual_min;
        if -gap > self.worst_gap {
            self.worst_gap = -gap;
        }
    }
}

#[test]
fn weak_duality_and_witness_integrity_hold_at_every_sweep() {
    for trial in 0u64..5 {
        let p = prepare(10 + trial as usize, 8 + 3 * trial as usize, 0xAB1E + trial);
        let config = SolverConfig {
            eps: 1e-7,
            max_sweeps: 50_000,
            ..SolverConfig::default()
        };
        let mut audit = SweepAuditor {
            dataset: &p.norm,
            relevance: &p.relevance,
            config: &config,
            sweeps_seen: 0,
            worst_gap: 0.0,
            worst_drift: 0.0,
        };
        let sol = mmfs_dcd_observed(&p.norm, &p.relevance, &config, &mut audit).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(audit.sweeps_seen >= 1);
        assert!(
            audit.worst_gap <= 1e-9,
            "trial {trial}: weak duality violated by {:.3e}",
            audit.worst_gap
        );
        assert!(
            audit.worst_drift <= 1e-8,
            "trial {trial}: witness drifted {:.3e} from its definition",
            audit.worst_drift
        );
    }
}

#[test]
fn total_mass_tracks_the_oracle_down_the_penalty_path() {
    let p = prepare(12, 18, 0x9A55);
    let gammas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut previous = f64::INFINITY;
    for &gamma in &gammas {
        let config = SolverConfig {
            gamma,
            eps: 1e-9,
            max_sweeps: 200_000,
            ..SolverConfig::default()
        };
        let sol = mmfs_dcd(&p.norm, &p.relevance, &config).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        let oracle = box_qp_pg(
            &p.q,
            p.relevance.values(),
            gamma,
            config.c,
            &BoxQpOpts {
                pg_tol: 1e-11,
                max_iter: 1_000_000,
                ..BoxQpOpts::default()
            },
        );
        let oracle_mass: f64 = oracle.alpha.iter().sum();
        assert!(
            (sol.sum_alpha - oracle_mass).abs() <= 1e-5,
            "gamma {gamma}: mass {} vs oracle {oracle_mass}",
            sol.sum_alpha
        );
        assert!(
            sol.sum_alpha <= previous + 1e-8,
            "gamma {gamma}: total mass rose along the penalty path"
        );
        previous = sol.sum_alpha;
    }
}

#[test]
fn constrained_solver_matches_exhaustive_enumeration_on_normalized_data() {
    for trial in 0u64..8 {
        let n = 5 + (trial as usize) % 4;
        let p = prepare(9 + trial as usize, n, 0xE7A1 + trial);
        let order = p.q.nrows();
        let mut data = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                data.push(p.q[(i, j)]);
            }
        }
        let gram = GramMatrix::from_dense(order, data).unwrap();
        let theta = 0.3 + 0.1 * (trial % 5) as f64;
        let c = 0.5;
        let sol = constrained_qp_solve(&gram, p.relevance.values(), theta, c, 1e-12).unwrap();
        let (best, best_obj) = simplex_qp_enumerate(&p.q, p.relevance.values(), theta, c);
        let got_obj = simplex_qp_objective(&p.q, p.relevance.values(), theta, &sol.alpha);
        assert!(
            got_obj - best_obj <= 1e-8,
            "trial {trial}: objective {got_obj} vs enumerated {best_obj} (alpha {:?} vs {:?})",
            sol.alpha,
            best
        );
    }
}
