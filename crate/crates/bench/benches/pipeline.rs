use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cvsep_bench::{eta, noon, random};
use cvsep_core::criteria::{Evaluator, ScanOptions};
use cvsep_core::{combo_marginal, differential_entropy, joint_density, Grid, GridSpec, Sign};
use std::hint::black_box;

fn joint(c: &mut Criterion) {
    let mut g = c.benchmark_group("joint_density");
    for points in [256, 1024] {
        let grid = Grid::symmetric(12.0, points).unwrap();
        let fock = noon(4);
        g.bench_with_input(BenchmarkId::new("noon4", points), &grid, |b, grid| {
            b.iter(|| joint_density(black_box(&fock), 0.3, 1.1, grid, grid).unwrap())
        });
        let analytic = eta();
        g.bench_with_input(BenchmarkId::new("eta", points), &grid, |b, grid| {
            b.iter(|| joint_density(black_box(&analytic), 0.3, 1.1, grid, grid).unwrap())
        });
    }
    g.finish();
}

fn marginals(c: &mut Criterion) {
    let grid = Grid::symmetric(12.0, 1024).unwrap();
    let j = joint_density(&noon(4), 0.0, 0.0, &grid, &grid).unwrap();
    c.bench_function("combo_aligned_1024", |b| b.iter(|| combo_marginal(black_box(&j), 1.0, 1.0, Sign::Minus).unwrap()));
    c.bench_function("combo_interpolated_1024", |b| {
        b.iter(|| combo_marginal(black_box(&j), 1.0, 0.77, Sign::Minus).unwrap())
    });
    let r = combo_marginal(&j, 1.0, 1.0, Sign::Plus).unwrap();
    c.bench_function("entropy_2047", |b| b.iter(|| differential_entropy(black_box(&r)).unwrap()));
}

fn scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("scan_pi_over_4");
    g.sample_size(10);
    let state = random(2, 0);
    for points in [256, 1024] {
        g.bench_with_input(BenchmarkId::new("random_d2", points), &points, |b, &points| {
            b.iter(|| {
                let mut ev = Evaluator::new(&state, GridSpec::with_points(points)).unwrap();
                ev.scan(&ScanOptions::default()).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, joint, marginals, scan);
criterion_main!(benches);
