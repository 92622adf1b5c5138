//! Dense reference arithmetic and random problem builders.
//!
//! Everything works on plain slices so the reference code shares no types
//! (and no bugs) with the library under test.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A dense random problem: row-major `m x n` values plus labels in {-1, +1}
/// with both classes present.
pub struct DenseData {
    pub m: usize,
    pub n: usize,
    /// Row-major instance-by-feature values, all nonzero.
    pub values: Vec<f64>,
    pub labels: Vec<f64>,
}

impl DenseData {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.m).map(|row| self.get(row, col)).collect()
    }
}

/// Random dense data with standard-normal entries.
pub fn random_dense(m: usize, n: usize, seed: u64) -> DenseData {
    assert!(m >= 2, "need at least two instances for two classes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..m * n)
        .map(|_| {
            let v = sample_normal(&mut rng);
            if v == 0.0 { 1e-3 } else { v }
        })
        .collect();
    let mut labels: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    labels[0] = 1.0;
    labels[1] = -1.0;
    DenseData { m, n, values, labels }
}

/// A dense quadratic instance over feature columns: the Gram matrix and the
/// absolute column-label correlations, computed by straightforward loops.
pub struct DenseInstance {
    pub q: DMatrix<f64>,
    pub r: Vec<f64>,
}

impl DenseInstance {
    /// Builds Q and r from already-normalized dense columns and labels.
    pub fn from_columns(cols: &[Vec<f64>], y: &[f64]) -> Self {
        let n = cols.len();
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] = dot(&cols[i], &cols[j]);
            }
        }
        let r = cols.iter().map(|c| dot(c, y).abs()).collect();
        DenseInstance { q, r }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Box-Muller standard normal draw.
pub fn sample_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Pearson correlation of each column of a dense row-major matrix with `y`.
/// Zero-variance columns get 0.
pub fn dense_pearson(dense: &[f64], m: usize, n: usize, y: &[f64]) -> Vec<f64> {
    assert_eq!(dense.len(), m * n);
    assert_eq!(y.len(), m);
    let ym = y.iter().sum::<f64>() / m as f64;
    let ys: f64 = y.iter().map(|v| (v - ym) * (v - ym)).sum::<f64>().sqrt();
    (0..n)
        .map(|j| {
            let col: Vec<f64> = (0..m).map(|i| dense[i * n + j]).collect();
            let cm = col.iter().sum::<f64>() / m as f64;
            let cs: f64 = col.iter().map(|v| (v - cm) * (v - cm)).sum::<f64>().sqrt();
            if cs == 0.0 || ys == 0.0 {
                return 0.0;
            }
            let cov: f64 = col.iter().zip(y).map(|(c, v)| (c - cm) * (v - ym)).sum();
            cov / (cs * ys)
        })
        .collect()
}

/// Dense linear-kernel Gram of a row-major matrix's *columns*.
pub fn dense_gram(dense: &[f64], m: usize, n: usize) -> DMatrix<f64> {
    assert_eq!(dense.len(), m * n);
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for row in 0..m {
                acc += dense[row * n + i] * dense[row * n + j];
            }
            q[(i, j)] = acc;
        }
    }
    q
}
