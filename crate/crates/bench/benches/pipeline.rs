//! Criterion benchmarks across the pipeline phases: parsing, normalization,
//! relevance scoring, both solver paths, and ranking.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use mmfs::{
    constrained_qp_solve, correlation_relevance, gram_matrix, mmfs_dcd, rank_features,
    KernelSpec, NormMode, ParseOptions, RankOptions, SolverConfig, SparseDataset,
};
use mmfs_bench::{bench_input, bench_input_text, prepared_problem};

fn solver_config(eps: f64) -> SolverConfig {
    SolverConfig {
        eps,
        ..SolverConfig::default()
    }
}

/// Parser throughput at two sparsity regimes.
fn parse(c: &mut Criterion) {
    let mut group = c.benchmark_group("parse");
    for (label, noise, nnz) in [("30nnz", 2000u32, Some(30.0)), ("dense", 200u32, None)] {
        let text = bench_input_text(2000, noise, nnz, 11);
        group.throughput(Throughput::Bytes(text.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(label), &text, |b, text| {
            b.iter(|| {
                SparseDataset::parse_svmlight(
                    black_box(text.as_bytes()),
                    &ParseOptions::default(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn normalize(c: &mut Criterion) {
    let raw = bench_input(2000, 500, Some(60.0), 13);
    c.bench_function("normalize/centered", |b| {
        b.iter(|| raw.normalized(black_box(NormMode::CenteredUnitNorm)).unwrap())
    });
}

fn relevance(c: &mut Criterion) {
    let raw = bench_input(2000, 500, Some(60.0), 17);
    let (normed, _) = raw.normalized(NormMode::CenteredUnitNorm).unwrap();
    c.bench_function("relevance/correlation", |b| {
        b.iter(|| correlation_relevance(black_box(&normed)).unwrap())
    });
}

/// The coordinate-descent path at growing column counts.
fn solve_dcd(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve/dcd");
    for noise in [250u32, 500, 1000] {
        let (normed, _rel, scaled) = prepared_problem(1500, noise, Some(40.0), 19, 0.5);
        let config = solver_config(1e-6);
        group.throughput(Throughput::Elements(normed.nnz() as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(noise + 2),
            &(normed, scaled),
            |b, (normed, scaled)| b.iter(|| mmfs_dcd(normed, scaled, &config).unwrap()),
        );
    }
    group.finish();
}

/// The constrained path; the Gram build dominates and is part of the cost.
fn solve_qp(c: &mut Criterion) {
    let (normed, rel, _scaled) = prepared_problem(800, 250, Some(40.0), 23, 0.5);
    c.bench_function("solve/qp", |b| {
        b.iter(|| {
            let gram = gram_matrix(black_box(&normed), &KernelSpec::Linear).unwrap();
            let r: Vec<f64> = gram
                .feature_ids()
                .iter()
                .map(|id| {
                    let pos = rel.feature_ids().binary_search(id).unwrap();
                    rel.values()[pos]
                })
                .collect();
            constrained_qp_solve(&gram, &r, 0.5, 1.0, 1e-6).unwrap()
        })
    });
}

fn rank(c: &mut Criterion) {
    let (normed, rel, scaled) = prepared_problem(1500, 1000, Some(40.0), 29, 0.5);
    let solution = mmfs_dcd(&normed, &scaled, &solver_config(1e-6)).unwrap();
    c.bench_function("rank", |b| {
        b.iter(|| rank_features(black_box(&solution), &rel, &RankOptions::default()).unwrap())
    });
}

criterion_group!(benches, parse, normalize, relevance, solve_dcd, solve_qp, rank);
criterion_main!(benches);
