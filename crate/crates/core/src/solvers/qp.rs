//! Projected gradient on the simplex-box dual over an explicit Gram matrix.
//!
//! Minimizes `0.5*(1-theta)*a'Qa - theta*r'a` over the set
//! `{0 <= a_i <= C, sum a = 1}`. With a correlation or MI Gram and `C >= 1`
//! this is the classic quadratic-program selector; with `theta = 1` the
//! quadratic drops out and the exact linear-program solution is returned
//! directly. Memory and per-iteration cost are O(N^2), so the Gram side of
//! the library gates how large N may get.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DualSolution, SolveStatus};
use crate::error::{Error, Result};
use crate::metrics::GramMatrix;

/// Default stopping tolerance: applies to both the step length and the
/// first-order residual.
pub const DEFAULT_QP_TOL: f64 = 1e-10;

/// Iteration budget of the projected-gradient loop.
const MAX_ITERATIONS: usize = 100_000;

/// Power-iteration count for the curvature estimate.
const POWER_ITERATIONS: usize = 100;

/// Coordinates this close to a box face count as sitting on it when the
/// multiplier and residual are estimated.
const BOUND_TOL: f64 = 1e-12;

/// Euclidean projection of `v` onto `{0 <= a_i <= c, sum a = 1}` by
/// bisection on the shift `tau` in `a_i = clip(v_i - tau, 0, c)`, run until
/// the mass mismatch is at most 1e-12.
pub fn project_box_simplex(v: &[f64], c: f64) -> Result<Vec<f64>> {
    let n = v.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot project an empty vector onto the simplex".into(),
        ));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "box bound must be positive and finite, got {c}"
        )));
    }
    if c * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::Infeasible(format!(
            "box [0, {c}]^{n} cannot hold total mass 1"
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "cannot project a non-finite vector".into(),
        ));
    }

    if v.iter().all(|&x| (0.0..=c).contains(&x)) {
        let mass = compensated_clip_sum(v, 0.0, c);
        if (mass - 1.0).abs() <= 1e-12 {
            return Ok(v.to_vec());
        }
    }

    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - c;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..500 {
        tau = 0.5 * (lo + hi);
        let mass = compensated_clip_sum(v, tau, c);
        if (mass - 1.0).abs() <= 1e-12 {
            break;
        }
        if mass > 1.0 {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    let alpha: Vec<f64> = v.iter().map(|&x| (x - tau).clamp(0.0, c)).collect();
    let mass = compensated_clip_sum(v, tau, c);
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::State(format!(
            "projection bisection stalled at mass {mass}"
        )));
    }
    Ok(alpha)
}

/// Compensated sum of `clip(v_i - tau, 0, c)`, so the mass test stays sharp
/// even for long vectors.
fn compensated_clip_sum(v: &[f64], tau: f64, c: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &x in v {
        let term = (x - tau).clamp(0.0, c);
        let y = term - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Solves the simplex-box quadratic program over the Gram matrix `q` and
/// relevance scores `r` (unscaled; the trade-off enters through `theta`).
/// `q` is assumed positive semidefinite — kernel Grams are by construction.
/// The multiplier of the sum-to-one constraint is reported as the bias.
pub fn constrained_qp_solve(
    q: &GramMatrix,
    r: &[f64],
    theta: f64,
    c: f64,
    tol: f64,
) -> Result<DualSolution> {
    let n = q.order();
    if n == 0 {
        return Err(Error::InvalidArgument("empty problem: the Gram matrix has order 0".into()));
    }
    if r.len() != n {
        return Err(Error::Shape(format!(
            "relevance has {} entries for a Gram matrix of order {n}",
            r.len()
        )));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "box bound must be positive and finite, got {c}"
        )));
    }
    if c * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::Infeasible(format!(
            "need C >= 1/N to place total mass 1; got C = {c} with N = {n}"
        )));
    }
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("relevance contains non-finite values".into()));
    }

    let curvature = if theta < 1.0 {
        (1.0 - theta) * top_eigenvalue(q).max(0.0)
    } else {
        0.0
    };
    if curvature <= 0.0 {
        // No quadratic part left: the exact solution fills the box greedily
        // by relevance.
        return Ok(greedy_fill(q, r, theta, c));
    }

    let step = 1.0 / (1.05 * curvature);
    let nd = n as f64;
    let mut alpha = vec![1.0 / nd; n];
    let mut grad = vec![0.0f64; n];
    let mut iters: u32 = 0;
    let mut hit_tolerance = false;

    for _ in 0..MAX_ITERATIONS {
        gradient(q, r, theta, &alpha, &mut grad);
        let (_, residual) = multiplier_and_residual(&alpha, &grad, c);
        if residual <= tol {
            hit_tolerance = true;
            break;
        }
        let target: Vec<f64> = alpha
            .iter()
            .zip(&grad)
            .map(|(a, g)| a - step * g)
            .collect();
        let next = project_box_simplex(&target, c)?;
        let moved = alpha
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        alpha = next;
        iters += 1;
        if moved <= tol {
            hit_tolerance = true;
            break;
        }
    }

    gradient(q, r, theta, &alpha, &mut grad);
    let (bias, residual) = multiplier_and_residual(&alpha, &grad, c);
    let status = if hit_tolerance || residual <= tol {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxSweeps
    };
    Ok(DualSolution {
        dual_objective: objective(q, r, theta, &alpha),
        sum_alpha: alpha.iter().sum(),
        feature_ids: q.feature_ids().to_vec(),
        alpha,
        w: None,
        bias,
        primal_objective: None,
        sweeps_used: iters,
        max_pg_violation: residual,
        status,
    })
}

/// `grad = (1-theta) * Q a - theta * r`.
fn gradient(q: &GramMatrix, r: &[f64], theta: f64, alpha: &[f64], out: &mut [f64]) {
    let n = q.order();
    for i in 0..n {
        let qa: f64 = q.row(i).iter().zip(alpha).map(|(x, a)| x * a).sum();
        out[i] = (1.0 - theta) * qa - theta * r[i];
    }
}

fn objective(q: &GramMatrix, r: &[f64], theta: f64, alpha: &[f64]) -> f64 {
    let n = q.order();
    let mut quad = 0.0f64;
    for i in 0..n {
        let qa: f64 = q.row(i).iter().zip(alpha).map(|(x, a)| x * a).sum();
        quad += alpha[i] * qa;
    }
    let linear: f64 = r.iter().zip(alpha).map(|(ri, a)| ri * a).sum();
    0.5 * (1.0 - theta) * quad - theta * linear
}

/// Estimates the equality-constraint multiplier and the first-order
/// residual at `alpha`. Interior coordinates pin the multiplier to the
/// negated gradient; with none, the tightest bracket from the bound
/// coordinates is used.
fn multiplier_and_residual(alpha: &[f64], grad: &[f64], c: f64) -> (f64, f64) {
    let mut interior_sum = 0.0f64;
    let mut interior_n = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for (&a, &g) in alpha.iter().zip(grad) {
        if a <= BOUND_TOL {
            lower = lower.max(-g);
        } else if a >= c - BOUND_TOL {
            upper = upper.min(-g);
        } else {
            interior_sum += -g;
            interior_n += 1;
        }
    }
    let b = if interior_n > 0 {
        interior_sum / interior_n as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else {
        upper
    };

    let mut residual = 0.0f64;
    for (&a, &g) in alpha.iter().zip(grad) {
        let slack = g + b;
        let miss = if a <= BOUND_TOL {
            (-slack).max(0.0)
        } else if a >= c - BOUND_TOL {
            slack.max(0.0)
        } else {
            slack.abs()
        };
        residual = residual.max(miss);
    }
    (b, residual)
}

/// Exact solution when the objective is linear: sort by relevance, fill each
/// coordinate to the box bound, and split the remainder equally across any
/// ties. With `theta = 0` and no curvature every point is optimal and the
/// uniform vector is returned.
fn greedy_fill(q: &GramMatrix, r: &[f64], theta: f64, c: f64) -> DualSolution {
    let n = q.order();
    let nd = n as f64;
    let mut alpha = vec![0.0f64; n];
    if theta == 0.0 {
        alpha.iter_mut().for_each(|a| *a = 1.0 / nd);
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).unwrap().then(a.cmp(&b)));
        let mut remaining = 1.0f64;
        let mut i = 0usize;
        while i < n && remaining > 0.0 {
            let mut j = i;
            while j < n && r[order[j]] == r[order[i]] {
                j += 1;
            }
            let group = (j - i) as f64;
            if c * group <= remaining {
                for &p in &order[i..j] {
                    alpha[p] = c;
                }
                remaining -= c * group;
            } else {
                let share = remaining / group;
                for &p in &order[i..j] {
                    alpha[p] = share;
                }
                remaining = 0.0;
            }
            i = j;
        }
    }
    let mut grad = vec![0.0f64; n];
    gradient(q, r, theta, &alpha, &mut grad);
    let (bias, residual) = multiplier_and_residual(&alpha, &grad, c);
    DualSolution {
        dual_objective: objective(q, r, theta, &alpha),
        sum_alpha: alpha.iter().sum(),
        feature_ids: q.feature_ids().to_vec(),
        alpha,
        w: None,
        bias,
        primal_objective: None,
        sweeps_used: 0,
        max_pg_violation: residual,
        status: SolveStatus::Converged,
    }
}

/// Largest eigenvalue of `q` by seeded power iteration.
fn top_eigenvalue(q: &GramMatrix) -> f64 {
    let n = q.order();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7031_7261);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    if nv == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|a| *a /= nv);
    }
    let mut lambda = 0.0f64;
    let mut u = vec![0.0f64; n];
    for _ in 0..POWER_ITERATIONS {
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = q.row(i).iter().zip(&v).map(|(x, a)| x * a).sum();
        }
        lambda = v.iter().zip(&u).map(|(a, b)| a * b).sum();
        let nu = norm(&u);
        if nu == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            v[i] = u[i] / nu;
        }
    }
    lambda
}
