// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pfs_core::algorithms::preset_dpp;
use pfs_core::analysis::distance_to_sublevel;
use pfs_core::problem::random_certified_polytope;
use pfs_core::{make_paper_instance, pfs_step, preset_cor1, run_dpp, run_pfs, Point};

fn bench_step(c: &mut Criterion) {
    let inst = make_paper_instance(0, 1).unwrap();
    let x = Point::new(vec![0.45, -0.3]);
    let grad = Point::new(vec![2.0, -1.0]);
    let (g, s) = inst.constraint.eval(&x).unwrap();
    c.bench_function("pfs_step", |b| {
        b.iter(|| pfs_step(black_box(&x), black_box(&grad), g, &s, 0.01, 0.05, 1.0).unwrap())
    });
}

fn bench_runs(c: &mut Criterion) {
    let horizon = 10_000;
    let inst = make_paper_instance(1, horizon).unwrap();
    let pfs = preset_cor1(&inst, 0.25, horizon, Point::zeros(2)).unwrap();
    let dpp = preset_dpp(&inst, horizon, false, 20.0).unwrap();
    let mut group = c.benchmark_group("runs_T1e4");
    group.sample_size(20);
    group.bench_function("pfs_cor1", |b| b.iter(|| run_pfs(&inst, &pfs, horizon).unwrap()));
    group.bench_function("dpp", |b| b.iter(|| run_dpp(&inst, &dpp, horizon).unwrap()));
    group.finish();
}

fn bench_distance(c: &mut Criterion) {
    let (inst, _) = random_certified_polytope(7, 3, 6, 1).unwrap();
    let x = Point::new(vec![0.9, -0.8, 0.7]);
    c.bench_function("distance_polytope_d3", |b| {
        b.iter(|| distance_to_sublevel(black_box(&x), &inst, 0.01).unwrap())
    });
}

criterion_group!(benches, bench_step, bench_runs, bench_distance);
criterion_main!(benches);
