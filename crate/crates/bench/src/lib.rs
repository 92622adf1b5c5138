//! Shared helpers for the benchmark suite (see `benches/`).

use mmfs::{generate, NormMode, RelevanceVector, SparseDataset, SynthConfig};

/// A synthetic input sized for benchmarking: `noise` sparse noise columns on
/// top of two informative ones, targeting `nnz_per_instance` stored values
/// per row.
pub fn bench_input(
    instances: usize,
    noise: u32,
    nnz_per_instance: Option<f64>,
    seed: u64,
) -> SparseDataset {
    let config = SynthConfig {
        n_instances: instances,
        n_informative: 2,
        duplicates_of: Vec::new(),
        n_noise: noise,
        nnz_per_instance,
        label_noise: 0.1,
        seed,
    };
    let (dataset, _truth) = generate(&config).expect("benchmark input generates");
    dataset
}

/// The serialized text of a bench input, for parser benchmarks.
pub fn bench_input_text(
    instances: usize,
    noise: u32,
    nnz_per_instance: Option<f64>,
    seed: u64,
) -> String {
    let dataset = bench_input(instances, noise, nnz_per_instance, seed);
    let mut buf = Vec::new();
    dataset
        .write_svmlight(&mut buf)
        .expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("datasets are UTF-8")
}

/// Normalized dataset plus trade-off-scaled relevance, ready to solve.
pub fn prepared_problem(
    instances: usize,
    noise: u32,
    nnz_per_instance: Option<f64>,
    seed: u64,
    theta: f64,
) -> (SparseDataset, RelevanceVector, RelevanceVector) {
    let raw = bench_input(instances, noise, nnz_per_instance, seed);
    let (normed, _report) = raw
        .normalized(NormMode::CenteredUnitNorm)
        .expect("benchmark input normalizes");
    let relevance = mmfs::correlation_relevance(&normed).expect("relevance computes");
    let scaled = mmfs::scale_relevance(&relevance, theta).expect("prescaling succeeds");
    (normed, relevance, scaled)
}
