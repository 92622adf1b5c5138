//! Ranking and top-K extraction from a solved dual.
//!
//! The dual weight is the importance score: features sort by weight
//! descending, with relevance and then feature id breaking ties. Weights at
//! or below the zero tolerance are noise, so the fallback tier orders purely
//! by relevance — that is what lets a top-K sweep extend past the number of
//! features the solver actually kept.

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::RelevanceVector;
use crate::solvers::{DualSolution, SolverConfig};

/// Where a feature sits relative to the box constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    /// Strictly inside the box: kept by the solver with room to spare.
    Support,
    /// Pinned at the upper bound: wants more weight than the box allows.
    MarginViolator,
    /// Weight at zero (up to tolerance): not kept; ranked by relevance only.
    Fallback,
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tier::Support => "support",
            Tier::MarginViolator => "margin_violator",
            Tier::Fallback => "fallback",
        };
        f.write_str(s)
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "support" => Ok(Tier::Support),
            "margin_violator" => Ok(Tier::MarginViolator),
            "fallback" => Ok(Tier::Fallback),
            other => Err(Error::InvalidArgument(format!("unknown tier '{other}'"))),
        }
    }
}

/// One ranked feature.
#[derive(Clone, Debug, PartialEq)]
pub struct RankEntry {
    /// Logical feature id, 0-based in memory.
    pub feature_id: u32,
    /// Dual weight as the solver left it.
    pub alpha: f64,
    /// Relevance score the ranking saw.
    pub relevance: f64,
    pub tier: Tier,
}

/// Thresholds for tier classification.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOptions {
    /// Box bound the solve ran with; weights within `bound_tol` of it are
    /// margin violators.
    pub c: f64,
    /// Weights at or below this count as zero (fallback tier).
    pub zero_tol: f64,
    /// Distance from the box bound that still counts as pinned.
    pub bound_tol: f64,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions { c: 1.0, zero_tol: 1e-12, bound_tol: 1e-12 }
    }
}

impl RankOptions {
    pub fn for_config(config: &SolverConfig) -> Self {
        RankOptions { c: config.c, ..Default::default() }
    }
}

/// Total order over the non-constant features of a solve, plus the
/// thresholds that produced it (echoed into every export for
/// reproducibility).
#[derive(Clone, Debug)]
pub struct FeatureRanking {
    entries: Vec<RankEntry>,
    n_support: usize,
    n_violator: usize,
    n_fallback: usize,
    options: RankOptions,
}

impl FeatureRanking {
    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_support(&self) -> usize {
        self.n_support
    }

    pub fn n_violator(&self) -> usize {
        self.n_violator
    }

    pub fn n_fallback(&self) -> usize {
        self.n_fallback
    }

    pub fn options(&self) -> &RankOptions {
        &self.options
    }

    /// Tab-separated export: `# key: value` headers, then one line per
    /// feature as `rank  feature  alpha  relevance  tier` with 1-based
    /// feature ids. Values print in shortest round-trip form, so a read-back
    /// is lossless.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# format: {}", crate::FORMAT_VERSION)?;
        writeln!(out, "# kind: feature_ranking")?;
        writeln!(out, "# c: {}", self.options.c)?;
        writeln!(out, "# zero_tol: {}", self.options.zero_tol)?;
        writeln!(out, "# bound_tol: {}", self.options.bound_tol)?;
        writeln!(
            out,
            "# counts: support={} margin_violator={} fallback={}",
            self.n_support, self.n_violator, self.n_fallback
        )?;
        writeln!(out, "# columns: rank\tfeature\talpha\trelevance\ttier")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                i + 1,
                e.feature_id + 1,
                e.alpha,
                e.relevance,
                e.tier
            )?;
        }
        Ok(())
    }

    /// Parses the TSV form back. Threshold headers are honored when present
    /// and default otherwise; counts are recomputed from the rows.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<FeatureRanking> {
        let mut options = RankOptions::default();
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let rest = rest.trim();
                for (key, slot) in [
                    ("c:", &mut options.c),
                    ("zero_tol:", &mut options.zero_tol),
                    ("bound_tol:", &mut options.bound_tol),
                ] {
                    if let Some(v) = rest.strip_prefix(key) {
                        *slot = v.trim().parse::<f64>().map_err(|_| {
                            Error::parse(line_no, format!("bad threshold value '{}'", v.trim()))
                        })?;
                    }
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 5 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 5 tab-separated fields, found {}", fields.len()),
                ));
            }
            let feature_1b: u32 = fields[1]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad feature id '{}'", fields[1])))?;
            if feature_1b == 0 {
                return Err(Error::parse(line_no, "feature ids are 1-based; found 0"));
            }
            let alpha: f64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad alpha '{}'", fields[2])))?;
            let relevance: f64 = fields[3]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad relevance '{}'", fields[3])))?;
            let tier =
                Tier::from_str(fields[4]).map_err(|e| Error::parse(line_no, e.to_string()))?;
            entries.push(RankEntry { feature_id: feature_1b - 1, alpha, relevance, tier });
        }
        Ok(FeatureRanking::from_entries(entries, options))
    }

    /// JSON export mirroring the TSV content. Feature ids are 1-based on
    /// this surface as well.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                serde_json::json!({
                    "rank": i + 1,
                    "feature": e.feature_id + 1,
                    "alpha": e.alpha,
                    "relevance": e.relevance,
                    "tier": e.tier.to_string(),
                })
            })
            .collect();
        serde_json::json!({
            "format": crate::FORMAT_VERSION,
            "kind": "feature_ranking",
            "c": self.options.c,
            "zero_tol": self.options.zero_tol,
            "bound_tol": self.options.bound_tol,
            "counts": {
                "support": self.n_support,
                "margin_violator": self.n_violator,
                "fallback": self.n_fallback,
            },
            "entries": entries,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<FeatureRanking> {
        let bad = |msg: &str| Error::InvalidArgument(format!("ranking json: {msg}"));
        let options = RankOptions {
            c: value["c"].as_f64().unwrap_or(1.0),
            zero_tol: value["zero_tol"].as_f64().unwrap_or(1e-12),
            bound_tol: value["bound_tol"].as_f64().unwrap_or(1e-12),
        };
        let raw = value["entries"]
            .as_array()
            .ok_or_else(|| bad("missing entries array"))?;
        let mut entries = Vec::with_capacity(raw.len());
        for e in raw {
            let feature_1b = e["feature"]
                .as_u64()
                .ok_or_else(|| bad("entry missing feature id"))?;
            if feature_1b == 0 {
                return Err(bad("feature ids are 1-based; found 0"));
            }
            let alpha = e["alpha"].as_f64().ok_or_else(|| bad("entry missing alpha"))?;
            let relevance = e["relevance"]
                .as_f64()
                .ok_or_else(|| bad("entry missing relevance"))?;
            let tier: Tier = e["tier"]
                .as_str()
                .ok_or_else(|| bad("entry missing tier"))?
                .parse()?;
            entries.push(RankEntry {
                feature_id: (feature_1b - 1) as u32,
                alpha,
                relevance,
                tier,
            });
        }
        Ok(FeatureRanking::from_entries(entries, options))
    }

    fn from_entries(mut entries: Vec<RankEntry>, options: RankOptions) -> FeatureRanking {
        sort_entries(&mut entries);
        let n_support = entries.iter().filter(|e| e.tier == Tier::Support).count();
        let n_violator = entries.iter().filter(|e| e.tier == Tier::MarginViolator).count();
        let n_fallback = entries.iter().filter(|e| e.tier == Tier::Fallback).count();
        FeatureRanking { entries, n_support, n_violator, n_fallback, options }
    }
}

/// Weight used for ordering: fallback-tier dust counts as exactly zero so
/// that features the solver dropped compete on relevance alone.
fn sort_weight(e: &RankEntry) -> f64 {
    if e.tier == Tier::Fallback {
        0.0
    } else {
        e.alpha
    }
}

fn sort_entries(entries: &mut [RankEntry]) {
    entries.sort_by(|a, b| {
        sort_weight(b)
            .partial_cmp(&sort_weight(a))
            .unwrap()
            .then(b.relevance.partial_cmp(&a.relevance).unwrap())
            .then(a.feature_id.cmp(&b.feature_id))
    });
}

/// Orders the solved features. `relevance` may score a superset of the
/// solution's columns (it usually scores every stored column while a Gram
/// solve covers only the usable ones); every solved feature must be scored.
/// Constant features never enter the ranking.
pub fn rank_features(
    solution: &DualSolution,
    relevance: &RelevanceVector,
    options: &RankOptions,
) -> Result<FeatureRanking> {
    if solution.alpha.len() != solution.feature_ids.len() {
        return Err(Error::Shape(format!(
            "solution carries {} weights for {} feature ids",
            solution.alpha.len(),
            solution.feature_ids.len()
        )));
    }
    if options.c <= 0.0 || options.c.is_nan() || options.zero_tol < 0.0 || options.bound_tol < 0.0 {
        return Err(Error::InvalidArgument(
            "ranking thresholds must be non-negative with a positive box bound".into(),
        ));
    }
    let rel_ids = relevance.feature_ids();
    let rel_vals = relevance.values();
    let rel_const = relevance.constant_flags();
    let mut cursor = 0usize;
    let mut entries = Vec::with_capacity(solution.alpha.len());
    for (pos, &id) in solution.feature_ids.iter().enumerate() {
        while cursor < rel_ids.len() && rel_ids[cursor] < id {
            cursor += 1;
        }
        if cursor >= rel_ids.len() || rel_ids[cursor] != id {
            return Err(Error::Shape(format!(
                "solved feature {} has no relevance score",
                id + 1
            )));
        }
        if rel_const[cursor] {
            continue;
        }
        let alpha = solution.alpha[pos];
        let r = rel_vals[cursor];
        if !alpha.is_finite() || !r.is_finite() {
            return Err(Error::State(format!(
                "cannot rank non-finite weight/score for feature {}; was the solve diverged?",
                id + 1
            )));
        }
        let tier = if alpha <= options.zero_tol {
            Tier::Fallback
        } else if alpha >= options.c - options.bound_tol {
            Tier::MarginViolator
        } else {
            Tier::Support
        };
        entries.push(RankEntry { feature_id: id, alpha, relevance: r, tier });
    }
    Ok(FeatureRanking::from_entries(entries, options.clone()))
}

/// The first `k` features of a ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct TopK {
    /// Selected ids in ranking order (0-based).
    pub feature_ids: Vec<u32>,
    /// How many of them came from the fallback tier.
    pub n_from_fallback: usize,
    /// What was asked for; the list is shorter when the ranking ran out.
    pub k_requested: usize,
}

/// Takes the `min(k, len)` prefix of the ranking. Because the ranking is one
/// total order, prefixes nest: `top_k(K)` is always a prefix of
/// `top_k(K+1)`.
pub fn top_k(ranking: &FeatureRanking, k: usize) -> Result<TopK> {
    if k == 0 {
        return Err(Error::InvalidArgument("top-K needs K >= 1".into()));
    }
    let take = k.min(ranking.len());
    let picked = &ranking.entries()[..take];
    Ok(TopK {
        feature_ids: picked.iter().map(|e| e.feature_id).collect(),
        n_from_fallback: picked.iter().filter(|e| e.tier == Tier::Fallback).count(),
        k_requested: k,
    })
}
