//! Reference QP solvers: dense projected gradient over a box, optional
//! active-set polishing, and exhaustive face enumeration for tiny
//! simplex-box problems.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Objective of the box problem: 1/2 a'Qa + (gamma/2)(sum a)^2 - r'a.
pub fn box_qp_objective(q: &DMatrix<f64>, r: &[f64], gamma: f64, alpha: &[f64]) -> f64 {
    let n = r.len();
    let a = DVector::from_column_slice(alpha);
    let qa = q * &a;
    let s: f64 = alpha.iter().sum();
    let lin: f64 = (0..n).map(|i| r[i] * alpha[i]).sum();
    0.5 * a.dot(&qa) + 0.5 * gamma * s * s - lin
}

/// Objective of the simplex-box problem: 1/2 (1-theta) a'Qa - theta r'a.
pub fn simplex_qp_objective(q: &DMatrix<f64>, r: &[f64], theta: f64, alpha: &[f64]) -> f64 {
    let a = DVector::from_column_slice(alpha);
    let qa = q * &a;
    let lin: f64 = r.iter().zip(alpha).map(|(ri, ai)| ri * ai).sum();
    0.5 * (1.0 - theta) * a.dot(&qa) - theta * lin
}

#[derive(Clone, Debug)]
pub struct BoxQpOpts {
    /// Stop when the largest box-KKT violation falls to this level.
    pub pg_tol: f64,
    pub max_iter: usize,
    /// Stop as soon as the objective reaches this value (matched-objective
    /// timing runs).
    pub stop_objective: Option<f64>,
    /// Periodically guess the active set and solve the free block exactly.
    pub polish: bool,
}

impl Default for BoxQpOpts {
    fn default() -> Self {
        BoxQpOpts { pg_tol: 1e-10, max_iter: 2_000_000, stop_objective: None, polish: true }
    }
}

#[derive(Clone, Debug)]
pub struct BoxQpResult {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub pg_violation: f64,
    pub converged: bool,
}

/// Projected gradient on min 1/2 a'Qa + (gamma/2)(sum a)^2 - r'a over
/// [0, c]^n, with fixed step from a power-iteration Lipschitz estimate.
pub fn box_qp_pg(
    q: &DMatrix<f64>,
    r: &[f64],
    gamma: f64,
    c: f64,
    opts: &BoxQpOpts,
) -> BoxQpResult {
    let n = r.len();
    assert_eq!(q.nrows(), n);
    assert_eq!(q.ncols(), n);
    // Full Hessian: Q plus the rank-one all-ones coupling.
    let h = DMatrix::from_fn(n, n, |i, j| q[(i, j)] + gamma);
    let l = 1.05 * lambda_max(&h).max(1e-12);
    let rv = DVector::from_column_slice(r);

    let mut alpha = DVector::zeros(n);
    let mut g = DVector::zeros(n);
    let mut iterations = 0usize;
    let mut violation;
    loop {
        g.gemv(1.0, &h, &alpha, 0.0);
        g -= &rv;
        violation = box_violation(&alpha, &g, c);
        if violation <= opts.pg_tol {
            break;
        }
        if let Some(target) = opts.stop_objective {
            if objective_of(&h, &rv, &alpha) <= target {
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
        for i in 0..n {
            alpha[i] = (alpha[i] - g[i] / l).clamp(0.0, c);
        }
        iterations += 1;

        if opts.polish && n <= 512 && iterations % 200 == 0 {
            if let Some(cand) = polish(&h, &rv, &alpha, &g, c) {
                let mut gc = DVector::zeros(n);
                gc.gemv(1.0, &h, &cand, 0.0);
                gc -= &rv;
                let cand_viol = box_violation(&cand, &gc, c);
                if cand_viol <= opts.pg_tol {
                    alpha = cand;
                    violation = cand_viol;
                    break;
                }
                if objective_of(&h, &rv, &cand) < objective_of(&h, &rv, &alpha) {
                    alpha = cand;
                }
            }
        }
    }

    BoxQpResult {
        objective: box_qp_objective(q, r, gamma, alpha.as_slice()),
        alpha: alpha.data.into(),
        iterations,
        pg_violation: violation,
        converged: violation <= opts.pg_tol,
    }
}

fn objective_of(h: &DMatrix<f64>, r: &DVector<f64>, a: &DVector<f64>) -> f64 {
    0.5 * a.dot(&(h * a)) - r.dot(a)
}

/// Largest box-KKT violation: the gradient must vanish on free coordinates
/// and point outward at active bounds.
fn box_violation(alpha: &DVector<f64>, g: &DVector<f64>, c: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..alpha.len() {
        let pg = if alpha[i] <= 0.0 {
            g[i].min(0.0)
        } else if alpha[i] >= c {
            g[i].max(0.0)
        } else {
            g[i]
        };
        worst = worst.max(pg.abs());
    }
    worst
}

/// Guess the active set from the current iterate and solve the free block of
/// H a = r exactly.
fn polish(
    h: &DMatrix<f64>,
    r: &DVector<f64>,
    alpha: &DVector<f64>,
    g: &DVector<f64>,
    c: f64,
) -> Option<DVector<f64>> {
    let n = alpha.len();
    let btol = 1e-9;
    let mut free = Vec::new();
    let mut at_c = Vec::new();
    for i in 0..n {
        if alpha[i] <= btol && g[i] > 0.0 {
            // pinned at zero
        } else if c.is_finite() && alpha[i] >= c - btol && g[i] < 0.0 {
            at_c.push(i);
        } else {
            free.push(i);
        }
    }
    let mut cand = DVector::zeros(n);
    for &i in &at_c {
        cand[i] = c;
    }
    if !free.is_empty() {
        let k = free.len();
        let hff = DMatrix::from_fn(k, k, |a, b| h[(free[a], free[b])]);
        let rhs = DVector::from_fn(k, |a, _| {
            let mut v = r[free[a]];
            for &j in &at_c {
                v -= h[(free[a], j)] * c;
            }
            v
        });
        let sol = hff.clone().lu().solve(&rhs).or_else(|| {
            hff.svd(true, true).solve(&rhs, 1e-12).ok()
        })?;
        for (a, &i) in free.iter().enumerate() {
            if sol[a] < -1e-9 || sol[a] > c + 1e-9 {
                return None; // wrong active-set guess
            }
            cand[i] = sol[a].clamp(0.0, c);
        }
    }
    Some(cand)
}

/// Power iteration estimate of the largest eigenvalue of a symmetric PSD
/// matrix; deterministic start vector.
pub fn lambda_max(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x00DD_5EED);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let mut lam = 0.0;
    for _ in 0..200 {
        let w = h * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lam = v.dot(&w) / v.dot(&v);
        v = w / norm;
    }
    lam.abs()
}

/// Smallest eigenvalue of a symmetric matrix given as a row-major slice.
pub fn min_eig_dense(n: usize, data: &[f64]) -> f64 {
    assert_eq!(data.len(), n * n);
    let m = DMatrix::from_fn(n, n, |i, j| data[i * n + j]);
    m.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Exhaustive solve of min 1/2 (1-theta) a'Qa - theta r'a over
/// { 0 <= a <= c, sum a = 1 } for tiny n: every {zero, at-c, free} pattern is
/// tried, the free block solved with the sum constraint, and the best
/// feasible candidate returned.
pub fn simplex_qp_enumerate(
    q: &DMatrix<f64>,
    r: &[f64],
    theta: f64,
    c: f64,
) -> (Vec<f64>, f64) {
    let n = r.len();
    assert!(n <= 12, "enumeration is 3^n; n = {n} too large");
    assert!(theta < 1.0, "faces are singular at theta = 1");
    assert!(c * n as f64 >= 1.0, "infeasible: c*n < 1");

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut pattern = vec![0u8; n]; // 0 = zero, 1 = at c, 2 = free
    'outer: loop {
        try_pattern(q, r, theta, c, &pattern, &mut best);
        // base-3 increment
        for slot in pattern.iter_mut() {
            if *slot < 2 {
                *slot += 1;
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    best.expect("at least one feasible pattern must exist when c*n >= 1")
}

fn try_pattern(
    q: &DMatrix<f64>,
    r: &[f64],
    theta: f64,
    c: f64,
    pattern: &[u8],
    best: &mut Option<(Vec<f64>, f64)>,
) {
    let n = pattern.len();
    let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 2).collect();
    let n_at_c = pattern.iter().filter(|&&p| p == 1).count();
    let fixed_mass = c * n_at_c as f64;

    let mut alpha = vec![0.0; n];
    for i in 0..n {
        if pattern[i] == 1 {
            alpha[i] = c;
        }
    }

    if free.is_empty() {
        if (fixed_mass - 1.0).abs() > 1e-9 {
            return;
        }
    } else {
        let remaining = 1.0 - fixed_mass;
        if remaining < -1e-12 {
            return;
        }
        // Stationarity on the face with the sum constraint:
        // [ (1-theta) Q_FF   1 ] [a_F]   [ theta r_F - (1-theta) Q_FB c ]
        // [ 1'               0 ] [ b ] = [ remaining                    ]
        let k = free.len();
        let mut sys = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for a in 0..k {
            for b in 0..k {
                sys[(a, b)] = (1.0 - theta) * q[(free[a], free[b])];
            }
            sys[(a, k)] = 1.0;
            sys[(k, a)] = 1.0;
            let mut v = theta * r[free[a]];
            for i in 0..n {
                if pattern[i] == 1 {
                    v -= (1.0 - theta) * q[(free[a], i)] * c;
                }
            }
            rhs[a] = v;
        }
        rhs[k] = remaining;
        let sol = match sys.clone().lu().solve(&rhs) {
            Some(s) => s,
            None => match sys.svd(true, true).solve(&rhs, 1e-12) {
                Ok(s) => s,
                Err(_) => return,
            },
        };
        for a in 0..k {
            if sol[a] < -1e-10 || sol[a] > c + 1e-10 {
                return;
            }
            alpha[free[a]] = sol[a].clamp(0.0, c);
        }
    }

    let obj = simplex_qp_objective(q, r, theta, &alpha);
    if best.as_ref().is_none_or(|(_, b)| obj < *b) {
        *best = Some((alpha, obj));
    }
}
