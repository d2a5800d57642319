use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lattice_kpp::kernel::{a_pow_entry, heat_kernel_apply, heat_kernel_entry, KernelWindow};
use lattice_kpp::kernel_suite::verify_kernel;
use lattice_kpp::{ModelParams, SiteField};

fn params() -> ModelParams {
    ModelParams::new(1.0, 0.5, 0.1, 0.2, 0.0)
}

fn closed_form_powers(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("a_pow_entry");
    for n in [10u64, 62, 200, 1000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| a_pow_entry(black_box(n), 0, 4, &p))
        });
    }
    g.finish();
}

fn heat_kernel(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("heat_kernel_entry");
    for t in [0.1, 1.0, 5.0] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| heat_kernel_entry(black_box(t), 0, 3, &p, 1e-14).unwrap())
        });
    }
    g.finish();

    c.bench_function("kernel_window t=1 hw=15", |b| {
        b.iter(|| KernelWindow::compute(black_box(1.0), 0, 15, &p, 1e-14).unwrap())
    });
    let phi = SiteField::from_fn(-200, 200, |i| (-(i as f64 / 20.0).powi(2)).exp());
    c.bench_function("heat_kernel_apply t=1 401 sites", |b| {
        b.iter(|| heat_kernel_apply(black_box(1.0), &phi, -200, 200, &p, 1e-14).unwrap())
    });
}

fn suite(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("verify_kernel");
    g.sample_size(10);
    g.bench_function("default times", |b| {
        b.iter(|| verify_kernel(&p, black_box(&[0.1, 1.0, 5.0]), 15).unwrap())
    });
    g.finish();
}

criterion_group!(benches, closed_form_powers, heat_kernel, suite);
criterion_main!(benches);
