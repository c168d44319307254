use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dfrc_core::harness::{draw_instance, solve_instance};
use dfrc_core::signal_model::sinr_matrix;
use dfrc_core::{Method, Scenario, SolverConfig};

fn instance(n_tx: usize) -> (Scenario, Vec<dfrc_core::ComplexVector>, Vec<dfrc_core::PskSymbol>) {
    let sc = Scenario::standard().with_arrays(n_tx, n_tx);
    let (h, s) = draw_instance(&sc, 1, 0, 0).expect("draw");
    (sc, h, s)
}

fn bench_methods(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_8x8_k5_15db");
    group.sample_size(20);
    let (sc, h, s) = instance(8);
    for method in Method::ALL {
        let cfg = SolverConfig::new(method);
        group.bench_with_input(BenchmarkId::from_parameter(method), &cfg, |b, cfg| {
            b.iter(|| solve_instance(&sc, cfg, 15.0, black_box(&h), &s).expect("solve"))
        });
    }
    group.finish();
}

fn bench_sca_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sca_vs_n_tx");
    group.sample_size(10);
    for n in [4usize, 8, 16, 32] {
        let (sc, h, s) = instance(n);
        let cfg = SolverConfig::new(Method::Sca);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_instance(&sc, &cfg, 15.0, black_box(&h), &s).expect("solve"))
        });
    }
    group.finish();
}

fn bench_sinr_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("sinr_matrix");
    for n in [8usize, 16, 32] {
        let sc = Scenario::standard().with_arrays(n, n);
        let x = dfrc_core::ComplexVector::from_element(n, num(1.0));
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| sinr_matrix(&sc, black_box(x)).expect("phi"))
        });
    }
    group.finish();
}

fn num(v: f64) -> dfrc_core::Complex64 {
    dfrc_core::Complex64::new(v, 0.0)
}

criterion_group!(benches, bench_methods, bench_sca_scaling, bench_sinr_matrix);
criterion_main!(benches);
