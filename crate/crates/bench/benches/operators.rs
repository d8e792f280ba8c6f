use std::hint::black_box;

use betaop_bench::{bench_params, cubic_fixture, quadratic};
use betaop_core::bernoulli::{integer_base_expansion_residual_mp, DEFAULT_MP_PRECISION};
use betaop_core::functions::Sin;
use betaop_core::partition::{building_block_check, refine_to_level};
use betaop_core::spectral::riesz_projections;
use betaop_core::transfer::{apply_transfer, apply_transfer_iterate, greedy_expand, PointwiseEngine};
use betaop_core::QuadNum;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn field(c: &mut Criterion) {
    let mut g = c.benchmark_group("field");
    for p in bench_params() {
        let x = QuadNum::from_ratio(3, 7, p) + QuadNum::beta(p).scale(&betaop_core::field::rat(-5, 11));
        let y = QuadNum::beta_inv(p);
        g.bench_with_input(BenchmarkId::new("mul", p), &(x.clone(), y), |b, (x, y)| b.iter(|| black_box(x * y)));
        g.bench_with_input(BenchmarkId::new("floor", p), &x, |b, x| b.iter(|| black_box(x.floor())));
    }
    g.finish();
}

fn transfer(c: &mut Criterion) {
    let mut g = c.benchmark_group("transfer");
    for p in bench_params() {
        let f = cubic_fixture(p);
        g.bench_with_input(BenchmarkId::new("apply", p), &f, |b, f| b.iter(|| apply_transfer(f).unwrap()));
        let q = quadratic(p);
        g.bench_with_input(BenchmarkId::new("iterate_12", p), &q, |b, q| {
            b.iter(|| apply_transfer_iterate(q, 12).unwrap())
        });
        let engine = PointwiseEngine::new(p);
        g.bench_with_input(BenchmarkId::new("pointwise_k8", p), &engine, |b, e| {
            b.iter(|| e.transfer_power(&|x: f64| x * x, 8, black_box(0.37)).unwrap())
        });
        let x = QuadNum::from_ratio(355, 1000, p);
        g.bench_with_input(BenchmarkId::new("greedy_30", p), &x, |b, x| b.iter(|| greedy_expand(x, 30).unwrap()));
    }
    g.finish();
}

fn structure(c: &mut Criterion) {
    let mut g = c.benchmark_group("structure");
    g.sample_size(10);
    for p in bench_params() {
        g.bench_with_input(BenchmarkId::new("riesz_projections", p), &p, |b, &p| {
            b.iter(|| riesz_projections(p).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("partition_m6", p), &p, |b, &p| b.iter(|| refine_to_level(p, 6).unwrap()));
        g.bench_with_input(BenchmarkId::new("blocks_m3_s3", p), &p, |b, &p| b.iter(|| building_block_check(p, 3, 3).unwrap()));
    }
    g.finish();
}

fn integer_base(c: &mut Criterion) {
    let mut g = c.benchmark_group("integer_base");
    g.sample_size(10);
    let f = Sin { scale: 1.0 };
    g.bench_function("mp_residual_q2_k8", |b| {
        b.iter(|| integer_base_expansion_residual_mp(&f, 2, 8, 3, 5, DEFAULT_MP_PRECISION).unwrap())
    });
    g.finish();
}

criterion_group!(benches, field, transfer, structure, integer_base);
criterion_main!(benches);
