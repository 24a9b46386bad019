use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fistab_core::theory::{essential_probability, monte_carlo_window, probability_surface};

fn closed_form(c: &mut Criterion) {
    c.bench_function("p(M=1000, W=20, k=100)", |b| {
        b.iter(|| essential_probability(black_box(1000), black_box(20), black_box(100)).unwrap())
    });
    c.bench_function("p(M=1e6, W=5e4, k=1e4)", |b| {
        b.iter(|| essential_probability(black_box(1_000_000), 50_000, 10_000).unwrap())
    });
    let ks: Vec<u64> = (1..=20).map(|i| i * 50).collect();
    let gaps: Vec<f64> = (0..=20).map(|i| f64::from(i) * 0.005).collect();
    c.bench_function("surface 20x21", |b| {
        b.iter(|| probability_surface(1000, black_box(&ks), black_box(&gaps)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("10k trials", |b| {
        b.iter(|| monte_carlo_window(1000, 20, 100, black_box(10_000), 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, closed_form, oracle);
criterion_main!(benches);
