use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use persuade_bench::all;
use persuade_core::convex_solver::{solve_lp, LinearProgram};
use persuade_core::matroid_sep::{exact_sep_oracle, greedy_sep_oracle, OracleKind, SepQuery};
use persuade_core::persuasion_opt::{approx_projection, offline_solve};

fn oracles(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    for f in all() {
        let lambda = vec![1.0; f.profiles.len()];
        let q = SepQuery { state: 0, profiles: &f.profiles, lambda: &lambda, weights: &f.weights, eps: 0.0 };
        group.bench_function(BenchmarkId::new("exact", f.name), |b| b.iter(|| exact_sep_oracle(&f.inst, black_box(&q))));
        group.bench_function(BenchmarkId::new("greedy", f.name), |b| b.iter(|| greedy_sep_oracle(&f.inst, black_box(&q))));
    }
    group.finish();
}

fn lp(c: &mut Criterion) {
    // max Σx subject to a dense band of ≤ rows
    let n = 20;
    let mut lp = LinearProgram::new(n);
    lp.objective = vec![1.0; n];
    for i in 0..n {
        let row = (0..n).map(|j| 1.0 + ((i * 7 + j * 3) % 5) as f64).collect();
        lp.add_le(row, 10.0 + i as f64);
    }
    c.bench_function("solve_lp_20x20", |b| b.iter(|| solve_lp(black_box(&lp))));
}

fn projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("approx_projection");
    group.sample_size(10);
    for f in all() {
        group.bench_function(f.name, |b| {
            b.iter(|| approx_projection(&f.inst, &f.profiles, black_box(&f.y), 0.05, OracleKind::Exact))
        });
    }
    group.finish();
}

fn offline(c: &mut Criterion) {
    let mut group = c.benchmark_group("offline_solve");
    group.sample_size(10);
    for f in all() {
        let lambda = vec![1.0; f.profiles.len()];
        group.bench_function(f.name, |b| {
            b.iter(|| offline_solve(&f.inst, &f.profiles, black_box(&lambda), 0.05, OracleKind::Greedy))
        });
    }
    group.finish();
}

criterion_group!(benches, oracles, lp, projection, offline);
criterion_main!(benches);
