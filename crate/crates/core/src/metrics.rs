//! Feature scoring: correlation relevance with trade-off scaling, kernel
//! similarity (Gram) matrices for the dense solver path, and a
//! mutual-information alternative.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{NormState, SparseDataset};
use crate::error::{Error, Result};
use crate::limits;

/// Per-feature relevance scores over the stored columns of a dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelevanceVector {
    /// Score per stored column, aligned with `feature_ids`.
    values: Vec<f64>,
    /// Logical ids of the scored columns.
    feature_ids: Vec<u32>,
    /// Columns excluded from selection (no variation).
    constant: Vec<bool>,
    /// Trade-off already folded into `values`, when any.
    theta_applied: Option<f64>,
    /// Size of the logical feature-id space.
    n_features: u32,
}

impl RelevanceVector {
    /// Wraps plain scores with identity feature ids (positions 0..len), for
    /// hand-built problems.
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        RelevanceVector {
            feature_ids: (0..n as u32).collect(),
            constant: vec![false; n],
            theta_applied: None,
            n_features: n as u32,
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn feature_ids(&self) -> &[u32] {
        &self.feature_ids
    }

    pub fn constant_flags(&self) -> &[bool] {
        &self.constant
    }

    pub fn theta_applied(&self) -> Option<f64> {
        self.theta_applied
    }

    pub fn n_features(&self) -> u32 {
        self.n_features
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Score of a logical feature id; features without a stored column
    /// score 0.
    pub fn value_of(&self, feature_id: u32) -> f64 {
        match self.feature_ids.binary_search(&feature_id) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// TSV dump: one `feature_id<TAB>value` line per stored column, ids
    /// 1-based to match the text data format.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (id, v) in self.feature_ids.iter().zip(&self.values) {
            writeln!(out, "{}\t{}", id + 1, v)?;
        }
        Ok(())
    }
}

/// Absolute correlation of every stored column with the label vector:
/// `r_i = |f_i . y|` on normalized data, which for centered columns is
/// exactly the absolute Pearson correlation. Constant columns score 0.
pub fn correlation_relevance(dataset: &SparseDataset) -> Result<RelevanceVector> {
    if dataset.norm_state() == NormState::Raw {
        return Err(Error::State(
            "relevance needs normalized columns and labels; call normalize first".into(),
        ));
    }
    let y = dataset.labels();
    let values: Vec<f64> = (0..dataset.n_stored_columns())
        .map(|pos| {
            if dataset.is_constant(pos) {
                0.0
            } else {
                dataset.col_dot(pos, y).abs()
            }
        })
        .collect();
    Ok(RelevanceVector {
        values,
        feature_ids: dataset.feature_ids().to_vec(),
        constant: dataset.constant_flags().to_vec(),
        theta_applied: None,
        n_features: dataset.n_features(),
    })
}

/// Applies the relevance/redundancy trade-off: multiplies every score by
/// `theta / (1 - theta)` and records theta. The boundary values 0 and 1 are
/// only meaningful to the simplex-box solver, which takes theta directly.
pub fn scale_relevance(r: &RelevanceVector, theta: f64) -> Result<RelevanceVector> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie strictly in (0, 1), got {theta}"
        )));
    }
    let factor = theta / (1.0 - theta);
    Ok(RelevanceVector {
        values: r.values.iter().map(|v| v * factor).collect(),
        feature_ids: r.feature_ids.clone(),
        constant: r.constant.clone(),
        theta_applied: Some(theta),
        n_features: r.n_features,
    })
}

/// Similarity function between feature columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelSpec {
    /// Plain dot product.
    Linear,
    /// Squared dot product (degree-two homogeneous polynomial).
    Poly2,
    /// exp(-d^2 / (2 sigma^2)) on the Euclidean column distance.
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::Gaussian { sigma } = self {
            if *sigma <= 0.0 || sigma.is_nan() {
                return Err(Error::InvalidArgument(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
        }
        Ok(())
    }
}

/// Dense symmetric similarity matrix over a set of feature columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramMatrix {
    order: usize,
    /// Row-major `order x order` values.
    data: Vec<f64>,
    /// Logical feature id behind each row/column.
    feature_ids: Vec<u32>,
}

impl GramMatrix {
    /// Wraps a row-major dense matrix, enforcing symmetry within 1e-12 and
    /// assigning identity feature ids.
    pub fn from_dense(order: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != order * order {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {order}x{order} matrix",
                data.len()
            )));
        }
        for i in 0..order {
            for j in (i + 1)..order {
                let a = data[i * order + j];
                let b = data[j * order + i];
                if (a - b).abs() > 1e-12 {
                    return Err(Error::Shape(format!(
                        "matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(GramMatrix {
            order,
            data,
            feature_ids: (0..order as u32).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn feature_ids(&self) -> &[u32] {
        &self.feature_ids
    }

    /// Debug dump: a header of 1-based feature ids, then one tab-separated
    /// row per line.
    pub fn write_dense_text<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let header: Vec<String> = self.feature_ids.iter().map(|id| (id + 1).to_string()).collect();
        writeln!(out, "{}", header.join("\t"))?;
        for i in 0..self.order {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join("\t"))?;
        }
        Ok(())
    }
}

/// Kernel value between two logical feature columns of a dataset.
pub fn kernel_eval(
    spec: &KernelSpec,
    dataset: &SparseDataset,
    feature_i: u32,
    feature_j: u32,
) -> Result<f64> {
    spec.validate()?;
    let dot = sparse_dot(dataset, feature_i, feature_j)?;
    Ok(match spec {
        KernelSpec::Linear => dot,
        KernelSpec::Poly2 => dot * dot,
        KernelSpec::Gaussian { sigma } => {
            if feature_i == feature_j {
                1.0
            } else {
                let ni = norm_sq_of(dataset, feature_i);
                let nj = norm_sq_of(dataset, feature_j);
                let dist_sq = (ni + nj - 2.0 * dot).max(0.0);
                (-dist_sq / (2.0 * sigma * sigma)).exp()
            }
        }
    })
}

fn norm_sq_of(dataset: &SparseDataset, feature_id: u32) -> f64 {
    dataset
        .position_of(feature_id)
        .map_or(0.0, |pos| dataset.col_norm_sq(pos))
}

/// Merge-style dot product of two sorted sparse columns.
fn sparse_dot(dataset: &SparseDataset, feature_i: u32, feature_j: u32) -> Result<f64> {
    for id in [feature_i, feature_j] {
        if id >= dataset.n_features() {
            return Err(Error::Shape(format!(
                "feature id {id} outside 0..{}",
                dataset.n_features()
            )));
        }
    }
    let (Some(pi), Some(pj)) = (dataset.position_of(feature_i), dataset.position_of(feature_j))
    else {
        return Ok(0.0);
    };
    let (ri, vi) = dataset.column(pi);
    let (rj, vj) = dataset.column(pj);
    let (mut a, mut b) = (0usize, 0usize);
    let mut acc = 0.0;
    while a < ri.len() && b < rj.len() {
        match ri[a].cmp(&rj[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                acc += vi[a] * vj[b];
                a += 1;
                b += 1;
            }
        }
    }
    Ok(acc)
}

/// Dense similarity matrix over the usable (stored, non-constant) columns,
/// with the default order limit. The coordinate-descent path never needs
/// this; it exists for the simplex-box solver and debugging.
pub fn gram_matrix(dataset: &SparseDataset, spec: &KernelSpec) -> Result<GramMatrix> {
    gram_matrix_with_limit(dataset, spec, limits::DEFAULT_GRAM_LIMIT)
}

/// [`gram_matrix`] with an explicit order limit.
pub fn gram_matrix_with_limit(
    dataset: &SparseDataset,
    spec: &KernelSpec,
    limit: usize,
) -> Result<GramMatrix> {
    spec.validate()?;
    let usable: Vec<usize> = (0..dataset.n_stored_columns())
        .filter(|&pos| !dataset.is_constant(pos))
        .collect();
    let n = usable.len();
    if n > limit {
        return Err(Error::Capacity(format!(
            "dense similarity over {n} columns exceeds the limit {limit}; \
             use the coordinate-descent path for large feature counts"
        )));
    }
    let ids: Vec<u32> = usable.iter().map(|&pos| dataset.feature_id(pos)).collect();
    let norms: Vec<f64> = usable.iter().map(|&pos| dataset.col_norm_sq(pos)).collect();

    let mut data = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let dot = sparse_dot(dataset, ids[a], ids[b])?;
            let v = match spec {
                KernelSpec::Linear => dot,
                KernelSpec::Poly2 => dot * dot,
                KernelSpec::Gaussian { sigma } => {
                    if a == b {
                        1.0
                    } else {
                        let dist_sq = (norms[a] + norms[b] - 2.0 * dot).max(0.0);
                        (-dist_sq / (2.0 * sigma * sigma)).exp()
                    }
                }
            };
            // Computed once per unordered pair and mirrored, so the matrix is
            // symmetric to the bit.
            data[a * n + b] = v;
            data[b * n + a] = v;
        }
    }
    Ok(GramMatrix { order: n, data, feature_ids: ids })
}

/// Median pairwise column distance over at most `max_pairs` sampled pairs —
/// the usual default bandwidth for the gaussian kernel. Falls back to 1 when
/// every sampled distance is zero.
pub fn median_sigma(dataset: &SparseDataset, max_pairs: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let usable: Vec<usize> = (0..dataset.n_stored_columns())
        .filter(|&pos| !dataset.is_constant(pos))
        .collect();
    let n = usable.len();
    if n < 2 {
        return Err(Error::State("need at least two usable columns".into()));
    }
    let total_pairs = n * (n - 1) / 2;
    let mut dists = Vec::new();
    let mut push_dist = |dataset: &SparseDataset, a: usize, b: usize| -> Result<()> {
        let (ia, ib) = (dataset.feature_id(usable[a]), dataset.feature_id(usable[b]));
        let dot = sparse_dot(dataset, ia, ib)?;
        let d2 = (dataset.col_norm_sq(usable[a]) + dataset.col_norm_sq(usable[b]) - 2.0 * dot)
            .max(0.0);
        dists.push(d2.sqrt());
        Ok(())
    };
    if total_pairs <= max_pairs {
        for a in 0..n {
            for b in (a + 1)..n {
                push_dist(dataset, a, b)?;
            }
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..max_pairs {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            push_dist(dataset, a, b)?;
        }
    }
    dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = dists[dists.len() / 2];
    Ok(if median > 0.0 {
        median
    } else {
        dists.into_iter().find(|d| *d > 0.0).unwrap_or(1.0)
    })
}

/// Discretization scheme for the mutual-information scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme", content = "bins")]
pub enum MiBinning {
    /// Three levels split at mean - std and mean + std. Columns with at most
    /// three distinct values keep those values as their levels.
    MeanStd,
    /// `k >= 2` equal-frequency bins.
    EqualFrequency(usize),
}

impl MiBinning {
    fn validate(&self) -> Result<()> {
        if let MiBinning::EqualFrequency(k) = self {
            if *k < 2 {
                return Err(Error::InvalidArgument(format!(
                    "equal-frequency binning needs at least 2 bins, got {k}"
                )));
            }
        }
        Ok(())
    }
}

/// Discretized column: level per instance plus the level count.
struct Levels {
    per_instance: Vec<u8>,
    n_levels: usize,
}

fn discretize(values: &[f64], binning: MiBinning) -> Levels {
    let m = values.len();
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() <= 1 {
        return Levels { per_instance: vec![0; m], n_levels: 1 };
    }
    // Few distinct values are categories already; thresholding them can
    // collapse everything into one level and hide perfect dependence.
    if distinct.len() <= 3 {
        let per_instance = values
            .iter()
            .map(|v| distinct.iter().position(|d| d == v).unwrap() as u8)
            .collect();
        return Levels { per_instance, n_levels: distinct.len() };
    }
    match binning {
        MiBinning::MeanStd => {
            let mean = values.iter().sum::<f64>() / m as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
            let std = var.sqrt();
            let (lo, hi) = (mean - std, mean + std);
            let per_instance = values
                .iter()
                .map(|&v| if v < lo { 0u8 } else if v > hi { 2 } else { 1 })
                .collect();
            Levels { per_instance, n_levels: 3 }
        }
        MiBinning::EqualFrequency(k) => {
            let k = k.min(distinct.len());
            let mut sorted: Vec<f64> = values.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // Upper edge of each bin except the last; ties resolve leftward.
            let edges: Vec<f64> = (1..k).map(|i| sorted[i * m / k]).collect();
            let per_instance = values
                .iter()
                .map(|&v| edges.iter().take_while(|&&e| v >= e).count() as u8)
                .collect();
            Levels { per_instance, n_levels: k }
        }
    }
}

/// Plug-in mutual information (nats) between two discretized vectors.
fn mi_of(a: &Levels, b: &Levels) -> f64 {
    let m = a.per_instance.len();
    let (la, lb) = (a.n_levels, b.n_levels);
    let mut joint = vec![0usize; la * lb];
    for (&x, &y) in a.per_instance.iter().zip(&b.per_instance) {
        joint[x as usize * lb + y as usize] += 1;
    }
    let mut pa = vec![0usize; la];
    let mut pb = vec![0usize; lb];
    for x in 0..la {
        for y in 0..lb {
            pa[x] += joint[x * lb + y];
            pb[y] += joint[x * lb + y];
        }
    }
    let mf = m as f64;
    let mut mi = 0.0;
    for x in 0..la {
        for y in 0..lb {
            let c = joint[x * lb + y];
            if c > 0 {
                let pxy = c as f64 / mf;
                let px = pa[x] as f64 / mf;
                let py = pb[y] as f64 / mf;
                mi += pxy * (pxy / (px * py)).ln();
            }
        }
    }
    mi.max(0.0)
}

fn column_levels(dataset: &SparseDataset, pos: usize, binning: MiBinning) -> Levels {
    let full = dataset
        .densify_column(dataset.feature_id(pos))
        .expect("stored column id is in range");
    discretize(&full, binning)
}

/// Mutual information of every stored column with the labels, in nats.
/// Constant columns score 0.
pub fn mi_relevance(dataset: &SparseDataset, binning: MiBinning) -> Result<RelevanceVector> {
    binning.validate()?;
    let label_levels = discretize(dataset.labels(), binning);
    let values: Vec<f64> = (0..dataset.n_stored_columns())
        .map(|pos| {
            if dataset.is_constant(pos) {
                0.0
            } else {
                mi_of(&column_levels(dataset, pos, binning), &label_levels)
            }
        })
        .collect();
    Ok(RelevanceVector {
        values,
        feature_ids: dataset.feature_ids().to_vec(),
        constant: dataset.constant_flags().to_vec(),
        theta_applied: None,
        n_features: dataset.n_features(),
    })
}

/// Pairwise mutual-information matrix over the usable columns; the diagonal
/// holds each feature's entropy (I(X;X) = H(X) for the plug-in estimator).
pub fn mi_matrix(dataset: &SparseDataset, binning: MiBinning) -> Result<GramMatrix> {
    mi_matrix_with_limit(dataset, binning, limits::DEFAULT_GRAM_LIMIT)
}

/// [`mi_matrix`] with an explicit order limit.
pub fn mi_matrix_with_limit(
    dataset: &SparseDataset,
    binning: MiBinning,
    limit: usize,
) -> Result<GramMatrix> {
    binning.validate()?;
    let usable: Vec<usize> = (0..dataset.n_stored_columns())
        .filter(|&pos| !dataset.is_constant(pos))
        .collect();
    let n = usable.len();
    if n > limit {
        return Err(Error::Capacity(format!(
            "mutual-information matrix over {n} columns exceeds the limit {limit}"
        )));
    }
    let levels: Vec<Levels> = usable
        .iter()
        .map(|&pos| column_levels(dataset, pos, binning))
        .collect();
    let ids: Vec<u32> = usable.iter().map(|&pos| dataset.feature_id(pos)).collect();
    let mut data = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = mi_of(&levels[a], &levels[b]);
            data[a * n + b] = v;
            data[b * n + a] = v;
        }
    }
    Ok(GramMatrix { order: n, data, feature_ids: ids })
}
