use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ringqed::parallel::ordered_map;
use ringqed::{coupling_table, full_hamiltonian, BasisLayout, NetworkConfig, C64};

fn matvec(c: &mut Criterion) {
    let config = NetworkConfig::three_node_example();
    let mut group = c.benchmark_group("matvec");
    for cutoff in [1, 2] {
        let layout = BasisLayout::full(3, cutoff);
        let op = full_hamiltonian(&config, &layout).unwrap().at(0.3);
        let x: Vec<C64> = (0..op.dim())
            .map(|i| C64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let mut y = vec![C64::new(0.0, 0.0); op.dim()];
        let alpha = C64::new(0.0, -1.0);
        group.bench_with_input(BenchmarkId::new("sequential", op.dim()), &op, |b, op| {
            b.iter(|| op.apply_add_seq(alpha, black_box(&x), &mut y))
        });
        group.bench_with_input(BenchmarkId::new("parallel", op.dim()), &op, |b, op| {
            b.iter(|| op.apply_add_par(alpha, black_box(&x), &mut y))
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let nus: Vec<f64> = (0..64).map(|i| 0.5 + 0.02 * i as f64).collect();
    let chi = |nu: &f64| {
        let mut config = NetworkConfig::three_node_example();
        config.nu = *nu;
        coupling_table(&config).unwrap().chi(1, 3).norm()
    };
    let mut group = c.benchmark_group("coupling_sweep");
    group.bench_function("sequential", |b| {
        b.iter(|| ordered_map(black_box(&nus), false, chi))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| ordered_map(black_box(&nus), true, chi))
    });
    group.finish();
}

criterion_group!(benches, matvec, sweep);
criterion_main!(benches);
