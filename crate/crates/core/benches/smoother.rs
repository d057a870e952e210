use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tmg_core::basis::BasisSpec;
use tmg_core::block::BlockVector;
use tmg_core::dg::{assemble_local, GlobalSystem};
use tmg_core::mg::{block_jacobi_sweep, random_guess, v_cycle, CycleConfig, LevelCount, TimeHierarchy};
use tmg_core::par::available_workers;
use tmg_core::Executor;

const STEPS: usize = 1 << 16;

fn executors() -> Vec<(String, Executor)> {
    let mut out = vec![("sequential".to_string(), Executor::sequential())];
    let mut w = 2;
    while w <= available_workers().max(2) {
        out.push((format!("pool-{w}"), Executor::new(w)));
        w *= 2;
    }
    out
}

fn smoother(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi_sweep");
    for p in [0, 1, 3] {
        let sys = GlobalSystem::new(assemble_local(&BasisSpec::lagrange(p), 1e-3).unwrap(), STEPS, false).unwrap();
        let f = random_guess(STEPS, p + 1, 1);
        let start = random_guess(STEPS, p + 1, 2);
        for (name, exec) in executors() {
            group.bench_with_input(BenchmarkId::new(name, format!("p{p}")), &p, |b, _| {
                let mut u = start.clone();
                b.iter(|| block_jacobi_sweep(&sys, black_box(&mut u), &f, 0.8, 1, &exec).unwrap());
            });
        }
    }
    group.finish();
}

fn cycle(c: &mut Criterion) {
    let mut group = c.benchmark_group("v_cycle");
    group.sample_size(20);
    for p in [0, 1] {
        let hier = TimeHierarchy::new(&BasisSpec::lagrange(p), 1e-3, STEPS, LevelCount::Max).unwrap();
        let f = BlockVector::zeros(STEPS, p + 1);
        let start = random_guess(STEPS, p + 1, 3);
        let cfg = CycleConfig::default();
        for (name, exec) in executors() {
            group.bench_with_input(BenchmarkId::new(name, format!("p{p}")), &p, |b, _| {
                let mut u = start.clone();
                b.iter(|| v_cycle(&hier, black_box(&mut u), &f, &cfg, &exec).unwrap());
            });
        }
    }
    group.finish();
}

criterion_group!(benches, smoother, cycle);
criterion_main!(benches);
