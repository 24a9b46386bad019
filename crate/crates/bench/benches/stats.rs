use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fistab_core::metrics::{auc, stability_indexes, RankVector};
use fistab_core::stats::{shapiro_wilk, wilcoxon_rank_sum};

fn tests(c: &mut Criterion) {
    let x: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 5003) as f64).collect();
    c.bench_function("shapiro-wilk n=5000", |b| {
        b.iter(|| shapiro_wilk(black_box(&x)).unwrap())
    });
    let (a, z) = x.split_at(2500);
    c.bench_function("rank-sum 2500 vs 2500", |b| {
        b.iter(|| wilcoxon_rank_sum(black_box(a), black_box(z)).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let n = 10_000;
    let labels: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
    let scores: Vec<f64> = (0..n).map(|i| ((i * 31) % 97) as f64).collect();
    c.bench_function("auc n=10000", |b| {
        b.iter(|| auc(black_box(&labels), black_box(&scores)).unwrap())
    });

    let names: Vec<String> = (0..200).map(|i| format!("f{i}")).collect();
    let r = RankVector::new(names.clone(), (1..=200).collect(), "a").unwrap();
    let s = RankVector::new(names, (1..=200).rev().collect(), "b").unwrap();
    c.bench_function("stability indexes p=200", |b| {
        b.iter(|| stability_indexes(black_box(&r), black_box(&s)).unwrap())
    });
}

criterion_group!(benches, tests, metrics);
criterion_main!(benches);
