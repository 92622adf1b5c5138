//! Synthetic benchmark data with known ground truth.
//!
//! Columns come in three blocks, in this order: informative features that
//! drive the label, exact duplicates of chosen informative features, and
//! independent noise. Labels are the sign of a weighted sum of the
//! informative columns plus a small noise term, so a selector should recover
//! the informative block and keep at most one member of each duplicate
//! group. All draws come from one seeded stream in a fixed order, making the
//! output — and anything serialized from it — bytewise reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::SparseDataset;
use crate::error::{Error, Result};
use crate::FORMAT_VERSION;

/// Layout and sampling parameters for [`generate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Number of instances (rows).
    pub n_instances: usize,
    /// Number of label-driving features; they occupy ids `0..n_informative`.
    pub n_informative: u32,
    /// One entry per duplicate column: the informative feature id it copies.
    /// Duplicates occupy the ids right after the informative block.
    pub duplicates_of: Vec<u32>,
    /// Number of trailing noise features.
    pub n_noise: u32,
    /// Target mean stored values per instance; `None` stores every value.
    /// Informative and duplicate columns are always fully stored, so the
    /// target must cover them.
    pub nnz_per_instance: Option<f64>,
    /// Scale of the additive noise inside the label sign.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_instances: 500,
            n_informative: 2,
            duplicates_of: vec![0, 0, 0],
            n_noise: 50,
            nnz_per_instance: None,
            label_noise: 0.1,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Total number of feature columns in the layout.
    pub fn n_features(&self) -> u32 {
        self.n_informative + self.duplicates_of.len() as u32 + self.n_noise
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(Error::InvalidArgument("need at least one instance".into()));
        }
        if self.n_informative == 0 {
            return Err(Error::InvalidArgument(
                "need at least one informative feature to define labels".into(),
            ));
        }
        for &src in &self.duplicates_of {
            if src >= self.n_informative {
                return Err(Error::InvalidArgument(format!(
                    "duplicate of feature {src}, but only {} informative features exist",
                    self.n_informative
                )));
            }
        }
        if !(self.label_noise >= 0.0 && self.label_noise.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "label noise must be nonnegative and finite, got {}",
                self.label_noise
            )));
        }
        if let Some(target) = self.nnz_per_instance {
            let dense_block = (self.n_informative + self.duplicates_of.len() as u32) as f64;
            if !(target > 0.0 && target.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "sparsity target must be positive and finite, got {target}"
                )));
            }
            if target < dense_block {
                return Err(Error::InvalidArgument(format!(
                    "sparsity target {target} cannot cover the {dense_block} always-stored \
                     informative and duplicate values per instance"
                )));
            }
            if target > self.n_features() as f64 {
                return Err(Error::InvalidArgument(format!(
                    "sparsity target {target} exceeds the {} features per instance",
                    self.n_features()
                )));
            }
        }
        Ok(())
    }
}

/// What the generator planted, for checking selector output against.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Ids of the label-driving features (`0..n_informative`).
    pub informative: Vec<u32>,
    /// Each group lists an informative source id followed by its duplicates;
    /// only sources that actually have duplicates appear.
    pub duplicate_groups: Vec<Vec<u32>>,
    /// Label-sum weight of each informative feature.
    pub coefficients: Vec<f64>,
    pub config: SynthConfig,
}

impl GroundTruth {
    /// Manifest with 1-based feature ids, matching the id convention of every
    /// other file format here.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "format": FORMAT_VERSION,
            "kind": "synth_manifest",
            "n_instances": self.config.n_instances,
            "n_features": self.config.n_features(),
            "informative": self.informative.iter().map(|&id| id + 1).collect::<Vec<u32>>(),
            "duplicate_groups": self.duplicate_groups.iter()
                .map(|g| g.iter().map(|&id| id + 1).collect::<Vec<u32>>())
                .collect::<Vec<_>>(),
            "coefficients": self.coefficients,
            "config": serde_json::to_value(&self.config).expect("config serializes"),
        })
    }

    pub fn write_json<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("manifest serializes");
        out.write_all(text.as_bytes())?;
        out.write_all(b"\n")
    }
}

fn sample_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draws a dataset from the configured layout.
///
/// Draw order is fixed — informative coefficients, informative columns,
/// noise columns, label noise — so a seed pins every byte of the output.
/// Duplicate columns copy their source exactly and consume no randomness.
pub fn generate(config: &SynthConfig) -> Result<(SparseDataset, GroundTruth)> {
    config.validate()?;
    let m = config.n_instances;
    let n_inf = config.n_informative as usize;
    let n_dup = config.duplicates_of.len();
    let n_noise = config.n_noise as usize;
    let n_total = config.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let coefficients: Vec<f64> = (0..n_inf).map(|_| 0.75 + 0.5 * rng.random::<f64>()).collect();

    // Informative block: fully stored, standard normal.
    let mut informative_cols: Vec<Vec<f64>> = Vec::with_capacity(n_inf);
    for _ in 0..n_inf {
        informative_cols.push((0..m).map(|_| sample_normal(&mut rng)).collect());
    }

    // Noise block: each value present independently so the expected stored
    // count per instance hits the target.
    let keep_prob = match config.nnz_per_instance {
        None => 1.0,
        Some(target) => {
            if n_noise == 0 {
                0.0
            } else {
                ((target - (n_inf + n_dup) as f64) / n_noise as f64).min(1.0)
            }
        }
    };
    let mut entries: Vec<(u32, u32, f64)> = Vec::new();
    for (k, col) in informative_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            entries.push((i as u32, k as u32, v));
        }
    }
    for (d, &src) in config.duplicates_of.iter().enumerate() {
        let id = (n_inf + d) as u32;
        for (i, &v) in informative_cols[src as usize].iter().enumerate() {
            entries.push((i as u32, id, v));
        }
    }
    for j in 0..n_noise {
        let id = (n_inf + n_dup + j) as u32;
        for i in 0..m {
            if keep_prob >= 1.0 || rng.random::<f64>() < keep_prob {
                entries.push((i as u32, id, sample_normal(&mut rng)));
            }
        }
    }

    let labels: Vec<f64> = (0..m)
        .map(|i| {
            let mut score = config.label_noise * sample_normal(&mut rng);
            for (k, col) in informative_cols.iter().enumerate() {
                score += coefficients[k] * col[i];
            }
            if score >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();

    let dataset = SparseDataset::from_entries(m, n_total, &entries, labels)?;

    let mut duplicate_groups: Vec<Vec<u32>> = Vec::new();
    for src in 0..n_inf as u32 {
        let members: Vec<u32> = config
            .duplicates_of
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s == src)
            .map(|(d, _)| (n_inf + d) as u32)
            .collect();
        if !members.is_empty() {
            let mut group = vec![src];
            group.extend(members);
            duplicate_groups.push(group);
        }
    }
    let truth = GroundTruth {
        informative: (0..config.n_informative).collect(),
        duplicate_groups,
        coefficients,
        config: config.clone(),
    };
    Ok((dataset, truth))
}
