use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinxfer::{
    build_hamiltonian, diagonalize, find_anticrossing, run_free, simulate_adiabatic,
    AdiabaticOptions, DisorderSpec, FreeRunOptions, SearchOptions, SweepPlan, SweepSide,
};
use spinxfer_bench::{compensated_chain, FIELD};

fn eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagonalize");
    for n in [6, 10, 15, 40] {
        let chain = DisorderSpec::from_variances(n, 0.1, 0.5, FIELD, 1)
            .unwrap()
            .sample_realization(0);
        let h = build_hamiltonian(&chain);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| diagonalize(black_box(h)).unwrap())
        });
    }
    group.finish();
}

fn resonance_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_anticrossing");
    for n in [6, 10, 15] {
        let (chain, _) = compensated_chain(n, 2);
        let opts = SearchOptions::for_sigma_b(0.5f64.sqrt());
        group.bench_with_input(BenchmarkId::from_parameter(n), &chain, |b, chain| {
            b.iter(|| find_anticrossing(black_box(chain), FIELD, &opts).unwrap())
        });
    }
    group.finish();
}

fn free_run(c: &mut Criterion) {
    let (chain, res) = compensated_chain(10, 3);
    let opts = FreeRunOptions::default();
    c.bench_function("run_free/10", |b| {
        b.iter(|| {
            run_free(
                black_box(&chain),
                FIELD,
                res.delta_b_star,
                res.half_splitting,
                0.0,
                &opts,
            )
            .unwrap()
        })
    });
}

fn adiabatic_sweep(c: &mut Criterion) {
    let (chain, res) = compensated_chain(6, 4);
    let plan = SweepPlan::calibrated(
        res.half_splitting,
        20.0,
        0.66,
        1.0,
        res.delta_b_star,
        SweepSide::Sender,
    )
    .unwrap();
    let opts = AdiabaticOptions::default();
    let mut group = c.benchmark_group("simulate_adiabatic");
    group.sample_size(10);
    group.bench_function("6", |b| {
        b.iter(|| simulate_adiabatic(black_box(&chain), FIELD, &plan, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    eigensolver,
    resonance_search,
    free_run,
    adiabatic_sweep
);
criterion_main!(benches);
