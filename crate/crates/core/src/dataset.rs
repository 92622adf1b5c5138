//! Feature-major sparse storage, SVMlight-style text I/O, and column
//! normalization.
//!
//! A dataset is a column-compressed matrix: each *feature* owns a sorted list
//! of `(instance, value)` pairs. Only non-empty columns are materialized, so a
//! file addressing tens of millions of feature ids but holding few nonzeros
//! parses and stores in memory proportional to the nonzero count, not the id
//! space. In-memory feature and instance ids are 0-based; the text surface is
//! 1-based by default, matching the common SVMlight convention.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits;

/// Normalization lifecycle of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormState {
    Raw,
    UnitNorm,
    CenteredUnitNorm,
}

/// Normalization to apply to every non-constant column and to the labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Divide by the column L2 norm. Preserves sparsity.
    UnitNorm,
    /// Subtract the column mean, then divide by the centered L2 norm, so the
    /// dot product of two columns is exactly their Pearson correlation.
    /// Densifies columns whose mean is nonzero.
    CenteredUnitNorm,
}

impl NormMode {
    fn state(self) -> NormState {
        match self {
            NormMode::UnitNorm => NormState::UnitNorm,
            NormMode::CenteredUnitNorm => NormState::CenteredUnitNorm,
        }
    }
}

/// Options for [`SparseDataset::parse_svmlight`].
#[derive(Clone, Debug)]
pub struct ParseOptions {
    /// Interpret feature indices in the text as 1-based (the default).
    pub one_based: bool,
    /// Caller-declared feature-id space. The parsed dataset spans at least
    /// this many features; an index beyond it is a parse error.
    pub declared_features: Option<u32>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { one_based: true, declared_features: None }
    }
}

/// Per-column statistics recorded by normalization, sufficient to apply the
/// same transform to held-out instances.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalizationReport {
    mode: NormMode,
    /// Logical ids of the stored columns, in storage order.
    feature_ids: Vec<u32>,
    /// Column means in original units (recorded for every column; only
    /// subtracted in centered mode).
    means: Vec<f64>,
    /// Column scale divisors; 1 for constant columns.
    scales: Vec<f64>,
    constant: Vec<bool>,
    label_mean: f64,
    label_scale: f64,
}

impl NormalizationReport {
    pub fn mode(&self) -> NormMode {
        self.mode
    }

    pub fn feature_ids(&self) -> &[u32] {
        &self.feature_ids
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn constant_flags(&self) -> &[bool] {
        &self.constant
    }

    pub fn n_constant(&self) -> usize {
        self.constant.iter().filter(|&&c| c).count()
    }

    pub fn label_mean(&self) -> f64 {
        self.label_mean
    }

    pub fn label_scale(&self) -> f64 {
        self.label_scale
    }

    /// Applies the recorded transform of stored column `pos` to a raw value.
    pub fn transform(&self, pos: usize, raw: f64) -> f64 {
        if self.constant[pos] {
            return raw;
        }
        match self.mode {
            NormMode::UnitNorm => raw / self.scales[pos],
            NormMode::CenteredUnitNorm => (raw - self.means[pos]) / self.scales[pos],
        }
    }
}

/// Column-compressed sparse dataset with one label per instance.
#[derive(Clone, Debug)]
pub struct SparseDataset {
    n_instances: usize,
    n_features: u32,
    /// Sorted logical ids of the stored (non-empty) columns.
    feature_ids: Vec<u32>,
    /// Offsets into `row_idx`/`values`; length `feature_ids.len() + 1`.
    col_ptr: Vec<usize>,
    /// Instance index of each stored value, strictly increasing per column.
    row_idx: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<f64>,
    norm_state: NormState,
    /// Per stored column: true when all `n_instances` values coincide
    /// (implicit zeros included).
    constant: Vec<bool>,
}

impl SparseDataset {
    /// Builds a dataset from `(instance, feature, value)` triplets.
    ///
    /// Triplets may arrive in any order; zero values are dropped rather than
    /// stored. Duplicate `(instance, feature)` pairs and non-finite values are
    /// rejected.
    pub fn from_entries(
        n_instances: usize,
        n_features: u32,
        entries: &[(u32, u32, f64)],
        labels: Vec<f64>,
    ) -> Result<Self> {
        if labels.len() != n_instances {
            return Err(Error::Shape(format!(
                "{} labels for {} instances",
                labels.len(),
                n_instances
            )));
        }
        if labels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("non-finite label".into()));
        }
        let mut kept: Vec<(u32, u32, f64)> = Vec::new();
        for &(inst, feat, val) in entries {
            if !val.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite value at instance {inst}, feature {feat}"
                )));
            }
            if inst as usize >= n_instances {
                return Err(Error::Shape(format!(
                    "instance index {inst} outside 0..{n_instances}"
                )));
            }
            if feat >= n_features {
                return Err(Error::Shape(format!(
                    "feature index {feat} outside 0..{n_features}"
                )));
            }
            if val != 0.0 {
                kept.push((feat, inst, val));
            }
        }
        kept.sort_unstable_by_key(|e| (e.0, e.1));
        for pair in kept.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate entry for instance {}, feature {}",
                    pair[0].1, pair[0].0
                )));
            }
        }

        let mut feature_ids = Vec::new();
        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::with_capacity(kept.len());
        let mut values = Vec::with_capacity(kept.len());
        for (feat, inst, val) in kept {
            if feature_ids.last() != Some(&feat) {
                feature_ids.push(feat);
                col_ptr.push(row_idx.len());
            }
            row_idx.push(inst);
            values.push(val);
            *col_ptr.last_mut().unwrap() = row_idx.len();
        }

        let mut ds = SparseDataset {
            n_instances,
            n_features,
            feature_ids,
            col_ptr,
            row_idx,
            values,
            labels,
            norm_state: NormState::Raw,
            constant: Vec::new(),
        };
        ds.recompute_constant_flags();
        ds.shrink();
        Ok(ds)
    }

    fn recompute_constant_flags(&mut self) {
        self.constant = (0..self.feature_ids.len())
            .map(|pos| {
                let (rows, vals) = self.column(pos);
                if rows.len() < self.n_instances {
                    // An implicit zero plus at least one stored nonzero.
                    false
                } else {
                    vals.windows(2).all(|w| w[0] == w[1])
                }
            })
            .collect();
    }

    fn shrink(&mut self) {
        self.feature_ids.shrink_to_fit();
        self.col_ptr.shrink_to_fit();
        self.row_idx.shrink_to_fit();
        self.values.shrink_to_fit();
        self.labels.shrink_to_fit();
        self.constant.shrink_to_fit();
    }

    /// Parses SVMlight-style text: one instance per line, `label idx:val ...`,
    /// indices strictly increasing within a line, `#` starting a comment that
    /// runs to end of line.
    ///
    /// When exactly two distinct label values occur they are mapped to
    /// {-1, +1} with the smaller value becoming -1; more than two distinct
    /// values are rejected (only binary tasks are supported).
    pub fn parse_svmlight<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Self> {
        let mut labels: Vec<f64> = Vec::new();
        let mut entries: Vec<(u32, u32, f64)> = Vec::new();
        let mut max_id: Option<u32> = None;

        for (line_no, line) in reader.lines().enumerate() {
            let line_no = line_no + 1;
            let line = line.map_err(Error::Io)?;
            let data = match line.find('#') {
                Some(pos) => &line[..pos],
                None => &line[..],
            };
            let mut tokens = data.split_ascii_whitespace();
            let Some(label_tok) = tokens.next() else { continue };
            let label: f64 = label_tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("malformed label `{label_tok}`")))?;
            if !label.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite label `{label_tok}`")));
            }
            let inst = labels.len() as u32;
            labels.push(label);

            let mut prev_id: Option<u32> = None;
            for tok in tokens {
                let Some((idx_str, val_str)) = tok.split_once(':') else {
                    return Err(Error::parse(line_no, format!("expected idx:val, got `{tok}`")));
                };
                let file_id: u32 = idx_str.parse().map_err(|_| {
                    Error::parse(line_no, format!("malformed feature index `{idx_str}`"))
                })?;
                let id = if opts.one_based {
                    file_id.checked_sub(1).ok_or_else(|| {
                        Error::parse(line_no, "feature index 0 in 1-based input".to_string())
                    })?
                } else {
                    file_id
                };
                let val: f64 = val_str.parse().map_err(|_| {
                    Error::parse(line_no, format!("malformed value `{val_str}`"))
                })?;
                if !val.is_finite() {
                    return Err(Error::parse(line_no, format!("non-finite value `{val_str}`")));
                }
                if let Some(prev) = prev_id {
                    if id <= prev {
                        return Err(Error::parse(
                            line_no,
                            format!("feature indices must be strictly increasing (saw {file_id})"),
                        ));
                    }
                }
                prev_id = Some(id);
                if let Some(declared) = opts.declared_features {
                    if id >= declared {
                        return Err(Error::parse(
                            line_no,
                            format!("feature index {file_id} exceeds declared count {declared}"),
                        ));
                    }
                }
                max_id = Some(max_id.map_or(id, |m| m.max(id)));
                if val != 0.0 {
                    entries.push((inst, id, val));
                }
            }
        }

        if labels.is_empty() {
            return Err(Error::parse(0, "no instances in input".to_string()));
        }
        let n_features = opts
            .declared_features
            .unwrap_or(0)
            .max(max_id.map_or(0, |m| m + 1));

        map_binary_labels(&mut labels)?;
        Self::from_entries(labels.len(), n_features, &entries, labels)
    }

    /// Serializes in the same text format the parser accepts (1-based ids).
    /// Values are written with shortest round-trip formatting, so
    /// parse -> write -> parse is lossless.
    pub fn write_svmlight<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let rows = self.to_rows_logical();
        for (inst, row) in rows.iter().enumerate() {
            let label = self.labels[inst];
            if label == 1.0 {
                write!(out, "+1")?;
            } else if label == -1.0 {
                write!(out, "-1")?;
            } else {
                write!(out, "{label}")?;
            }
            for &(id, val) in row {
                write!(out, " {}:{}", id + 1, val)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    /// Size of the logical feature-id space (columns may be empty).
    pub fn n_features(&self) -> u32 {
        self.n_features
    }

    /// Number of materialized (non-empty) columns.
    pub fn n_stored_columns(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn norm_state(&self) -> NormState {
        self.norm_state
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Class labels as {-1, +1} signs. Normalization preserves label signs, so
    /// this recovers the original classes in any state. Zero labels (possible
    /// only for datasets built with non-binary labels) are rejected.
    pub fn binary_labels(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.labels.len());
        for &l in &self.labels {
            if l == 0.0 {
                return Err(Error::State("label with no sign; labels are not binary".into()));
            }
            out.push(if l > 0.0 { 1.0 } else { -1.0 });
        }
        Ok(out)
    }

    pub fn feature_ids(&self) -> &[u32] {
        &self.feature_ids
    }

    /// Logical id of the stored column at `pos`.
    pub fn feature_id(&self, pos: usize) -> u32 {
        self.feature_ids[pos]
    }

    /// Storage position of a logical feature id, if that column is non-empty.
    pub fn position_of(&self, feature_id: u32) -> Option<usize> {
        self.feature_ids.binary_search(&feature_id).ok()
    }

    /// Stored column at storage position `pos`: instance indices and values.
    pub fn column(&self, pos: usize) -> (&[u32], &[f64]) {
        let lo = self.col_ptr[pos];
        let hi = self.col_ptr[pos + 1];
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn column_nnz(&self, pos: usize) -> usize {
        self.col_ptr[pos + 1] - self.col_ptr[pos]
    }

    /// True when every value of stored column `pos` coincides (implicit zeros
    /// included); such columns carry no signal and are excluded downstream.
    pub fn is_constant(&self, pos: usize) -> bool {
        self.constant[pos]
    }

    pub fn constant_flags(&self) -> &[bool] {
        &self.constant
    }

    /// Dot product of logical feature column `feature_id` with a dense
    /// instance-length vector. Empty columns contribute zero; runs in time
    /// proportional to the column's stored entries.
    pub fn column_dot(&self, feature_id: u32, dense: &[f64]) -> Result<f64> {
        if feature_id >= self.n_features {
            return Err(Error::Shape(format!(
                "feature id {feature_id} outside 0..{}",
                self.n_features
            )));
        }
        if dense.len() != self.n_instances {
            return Err(Error::Shape(format!(
                "dense vector length {} != {} instances",
                dense.len(),
                self.n_instances
            )));
        }
        Ok(match self.position_of(feature_id) {
            Some(pos) => self.col_dot(pos, dense),
            None => 0.0,
        })
    }

    /// Dot product of the stored column at `pos` with a dense vector.
    #[inline]
    pub fn col_dot(&self, pos: usize, dense: &[f64]) -> f64 {
        let (rows, vals) = self.column(pos);
        let mut acc = 0.0;
        for (&r, &v) in rows.iter().zip(vals) {
            acc += v * dense[r as usize];
        }
        acc
    }

    /// Adds `scale` times stored column `pos` into a dense accumulator.
    #[inline]
    pub fn col_axpy(&self, pos: usize, scale: f64, dense: &mut [f64]) {
        let (rows, vals) = self.column(pos);
        for (&r, &v) in rows.iter().zip(vals) {
            dense[r as usize] += scale * v;
        }
    }

    /// Squared L2 norm of the stored column at `pos`.
    pub fn col_norm_sq(&self, pos: usize) -> f64 {
        let (_, vals) = self.column(pos);
        vals.iter().map(|v| v * v).sum()
    }

    /// Normalizes columns and labels, producing a new dataset and the
    /// statistics used, with the dense gate at its configured default
    /// (see [`crate::limits`]).
    pub fn normalized(&self, mode: NormMode) -> Result<(SparseDataset, NormalizationReport)> {
        self.normalized_with_limit(mode, limits::dense_limit())
    }

    /// Like [`SparseDataset::normalized`] with an explicit dense gate:
    /// centering may store up to `instances * stored columns` values and is
    /// refused when that product exceeds `dense_limit`.
    pub fn normalized_with_limit(
        &self,
        mode: NormMode,
        dense_limit: usize,
    ) -> Result<(SparseDataset, NormalizationReport)> {
        if self.norm_state != NormState::Raw {
            return Err(Error::State(format!(
                "dataset already normalized ({:?})",
                self.norm_state
            )));
        }
        if self.n_instances == 0 || self.feature_ids.is_empty() {
            return Err(Error::State("nothing to normalize: empty dataset".into()));
        }
        if mode == NormMode::CenteredUnitNorm {
            let projected = self.n_instances.saturating_mul(self.feature_ids.len());
            if projected > dense_limit {
                return Err(Error::Capacity(format!(
                    "centering may store {projected} values (> limit {dense_limit}); \
                     use unit_norm or raise the limit"
                )));
            }
        }

        let m = self.n_instances as f64;
        let n_cols = self.feature_ids.len();
        let mut means = Vec::with_capacity(n_cols);
        let mut scales = Vec::with_capacity(n_cols);

        for pos in 0..n_cols {
            let (_, vals) = self.column(pos);
            let sum: f64 = vals.iter().sum();
            let sumsq: f64 = vals.iter().map(|v| v * v).sum();
            let mean = sum / m;
            means.push(mean);
            if self.constant[pos] {
                scales.push(1.0);
                continue;
            }
            let norm_sq = match mode {
                NormMode::UnitNorm => sumsq,
                NormMode::CenteredUnitNorm => (sumsq - m * mean * mean).max(0.0),
            };
            debug_assert!(norm_sq > 0.0, "non-constant column with zero norm");
            scales.push(norm_sq.sqrt());
        }

        // Rebuild columns under the transform, storing only nonzero results.
        let mut feature_ids = Vec::with_capacity(n_cols);
        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::with_capacity(self.row_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for pos in 0..n_cols {
            let (rows, vals) = self.column(pos);
            let start = values.len();
            if self.constant[pos] {
                // Flagged columns pass through untouched; they are excluded
                // from scoring and ranking rather than rescaled.
                row_idx.extend_from_slice(rows);
                values.extend_from_slice(vals);
            } else {
                match mode {
                    NormMode::UnitNorm => {
                        let s = scales[pos];
                        row_idx.extend_from_slice(rows);
                        values.extend(vals.iter().map(|v| v / s));
                    }
                    NormMode::CenteredUnitNorm => {
                        let (mean, s) = (means[pos], scales[pos]);
                        let mut stored = rows.iter().zip(vals).peekable();
                        for inst in 0..self.n_instances as u32 {
                            let raw = match stored.peek() {
                                Some(&(&r, &v)) if r == inst => {
                                    stored.next();
                                    v
                                }
                                _ => 0.0,
                            };
                            let t = (raw - mean) / s;
                            if t != 0.0 {
                                row_idx.push(inst);
                                values.push(t);
                            }
                        }
                    }
                }
            }
            if values.len() > start {
                feature_ids.push(self.feature_ids[pos]);
                col_ptr.push(values.len());
            }
        }

        // Labels get the same treatment as a column.
        let lsum: f64 = self.labels.iter().sum();
        let label_mean = lsum / m;
        let (shift, label_scale) = match mode {
            NormMode::UnitNorm => {
                let n: f64 = self.labels.iter().map(|v| v * v).sum::<f64>().sqrt();
                (0.0, n)
            }
            NormMode::CenteredUnitNorm => {
                let n: f64 = self
                    .labels
                    .iter()
                    .map(|v| (v - label_mean) * (v - label_mean))
                    .sum::<f64>()
                    .sqrt();
                (label_mean, n)
            }
        };
        if label_scale == 0.0 {
            return Err(Error::State("labels are constant; cannot normalize".into()));
        }
        let labels: Vec<f64> = self.labels.iter().map(|v| (v - shift) / label_scale).collect();

        // Columns that vanished under the transform cannot occur: centering a
        // non-constant column leaves a nonzero vector, and constant columns
        // pass through with their stored entries.
        let mut ds = SparseDataset {
            n_instances: self.n_instances,
            n_features: self.n_features,
            feature_ids,
            col_ptr,
            row_idx,
            values,
            labels,
            norm_state: mode.state(),
            constant: Vec::new(),
        };
        ds.recompute_constant_flags();
        ds.shrink();

        let report = NormalizationReport {
            mode,
            feature_ids: self.feature_ids.clone(),
            means,
            scales,
            constant: self.constant.clone(),
            label_mean,
            label_scale,
        };
        Ok((ds, report))
    }

    /// Restriction to a subset of instances (given as strictly increasing
    /// indices), for building training folds. Only raw datasets may be
    /// subset, because per-column statistics stop being meaningful on a
    /// slice of normalized data.
    pub fn subset_instances(&self, keep: &[u32]) -> Result<SparseDataset> {
        if self.norm_state != NormState::Raw {
            return Err(Error::State(
                "instance subsets must be taken before normalization".into(),
            ));
        }
        if keep.is_empty() {
            return Err(Error::InvalidArgument("empty instance subset".into()));
        }
        for w in keep.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidArgument(
                    "subset indices must be strictly increasing".into(),
                ));
            }
        }
        if *keep.last().unwrap() as usize >= self.n_instances {
            return Err(Error::Shape(format!(
                "subset index {} outside 0..{}",
                keep.last().unwrap(),
                self.n_instances
            )));
        }

        // Inverse map old instance -> new position.
        let mut new_pos = vec![u32::MAX; self.n_instances];
        for (new, &old) in keep.iter().enumerate() {
            new_pos[old as usize] = new as u32;
        }

        let mut feature_ids = Vec::new();
        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for pos in 0..self.feature_ids.len() {
            let (rows, vals) = self.column(pos);
            let start = values.len();
            for (&r, &v) in rows.iter().zip(vals) {
                let np = new_pos[r as usize];
                if np != u32::MAX {
                    row_idx.push(np);
                    values.push(v);
                }
            }
            if values.len() > start {
                feature_ids.push(self.feature_ids[pos]);
                col_ptr.push(values.len());
            }
        }
        let labels = keep.iter().map(|&i| self.labels[i as usize]).collect();

        let mut ds = SparseDataset {
            n_instances: keep.len(),
            n_features: self.n_features,
            feature_ids,
            col_ptr,
            row_idx,
            values,
            labels,
            norm_state: NormState::Raw,
            constant: Vec::new(),
        };
        ds.recompute_constant_flags();
        ds.shrink();
        Ok(ds)
    }

    /// Instance-major view restricted to the stored columns at `positions`,
    /// re-indexed to `0..positions.len()` in the given order. Each row is
    /// sorted by the new index.
    pub fn rows_for_positions(&self, positions: &[usize]) -> Vec<Vec<(u32, f64)>> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.n_instances];
        for (k, &pos) in positions.iter().enumerate() {
            let (rs, vs) = self.column(pos);
            for (&r, &v) in rs.iter().zip(vs) {
                rows[r as usize].push((k as u32, v));
            }
        }
        rows
    }

    /// Instance-major view over all stored columns with logical feature ids.
    pub fn to_rows_logical(&self) -> Vec<Vec<(u32, f64)>> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.n_instances];
        for pos in 0..self.feature_ids.len() {
            let id = self.feature_ids[pos];
            let (rs, vs) = self.column(pos);
            for (&r, &v) in rs.iter().zip(vs) {
                rows[r as usize].push((id, v));
            }
        }
        rows
    }

    /// Dense row-major copy (`n_instances x n_features`), gated by the dense
    /// limit. Intended for small problems and test oracles.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.n_features as usize;
        let total = self.n_instances.saturating_mul(n);
        if total > limits::dense_limit() {
            return Err(Error::Capacity(format!(
                "dense copy would hold {total} values (> limit {})",
                limits::dense_limit()
            )));
        }
        let mut dense = vec![0.0; total];
        for pos in 0..self.feature_ids.len() {
            let id = self.feature_ids[pos] as usize;
            let (rs, vs) = self.column(pos);
            for (&r, &v) in rs.iter().zip(vs) {
                dense[r as usize * n + id] = v;
            }
        }
        Ok(dense)
    }

    /// Stored column as a dense instance-length vector. Empty columns yield
    /// all zeros.
    pub fn densify_column(&self, feature_id: u32) -> Result<Vec<f64>> {
        if feature_id >= self.n_features {
            return Err(Error::Shape(format!(
                "feature id {feature_id} outside 0..{}",
                self.n_features
            )));
        }
        let mut out = vec![0.0; self.n_instances];
        if let Some(pos) = self.position_of(feature_id) {
            let (rs, vs) = self.column(pos);
            for (&r, &v) in rs.iter().zip(vs) {
                out[r as usize] = v;
            }
        }
        Ok(out)
    }

    /// Bytes held in heap allocations, for asserting that storage scales with
    /// the nonzero count.
    pub fn heap_bytes(&self) -> usize {
        self.feature_ids.capacity() * size_of::<u32>()
            + self.col_ptr.capacity() * size_of::<usize>()
            + self.row_idx.capacity() * size_of::<u32>()
            + self.values.capacity() * size_of::<f64>()
            + self.labels.capacity() * size_of::<f64>()
            + self.constant.capacity() * size_of::<bool>()
    }
}

/// Maps exactly-two-distinct labels onto {-1, +1} (smaller value -> -1).
/// One distinct value is left untouched; three or more are rejected.
fn map_binary_labels(labels: &mut [f64]) -> Result<()> {
    let mut distinct: Vec<f64> = Vec::new();
    for &l in labels.iter() {
        if !distinct.contains(&l) {
            distinct.push(l);
            if distinct.len() > 2 {
                return Err(Error::InvalidArgument(
                    "more than two distinct label values; only binary tasks are supported"
                        .into(),
                ));
            }
        }
    }
    if distinct.len() == 2 {
        let lo = distinct[0].min(distinct[1]);
        for l in labels.iter_mut() {
            *l = if *l == lo { -1.0 } else { 1.0 };
        }
    }
    Ok(())
}
