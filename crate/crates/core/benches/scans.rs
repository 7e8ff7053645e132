use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gkdv_core::jost;
use gkdv_core::par::Execution;
use gkdv_core::resolvent::{self, Resolvent};
use gkdv_core::SolitonParams;
use num_complex::Complex64 as C;

fn evans(c: &mut Criterion) {
    let params = SolitonParams::unit(2.0).unwrap();
    let grid = jost::jost_grid(2.0, 0.01).unwrap();
    let lambdas: Vec<C> = resolvent::log_grid(0.05, 30.0, 32)
        .into_iter()
        .map(|t| C::new(0.0, t))
        .collect();
    let mut group = c.benchmark_group("evans_scan");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| jost::evans_scan(&lambdas, &params, &grid, e))
        });
    }
    group.finish();
}

fn smoothing(c: &mut Criterion) {
    let params = SolitonParams::unit(2.0).unwrap();
    let grid = resolvent::resolvent_grid(2.0).unwrap();
    let res = Resolvent::new(&grid, &params).unwrap();
    let probes = resolvent::default_probes(&grid);
    let taus = resolvent::log_grid(0.01, 30.0, 8);
    let kappa = resolvent::default_kappa(2.0);
    let mut group = c.benchmark_group("smoothing_norm_scan");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| resolvent::smoothing_norm_scan(&res, &taus, &probes, kappa, e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, evans, smoothing);
criterion_main!(benches);
