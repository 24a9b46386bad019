use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fistab_bench::fixture;
use fistab_core::degradation::bootstrap_experiment;
use fistab_core::forest::fit;
use fistab_core::{ExperimentConfig, ForestHyperparams};

fn forest_fit(c: &mut Criterion) {
    let d = fixture(2000, 20, 1);
    let h = ForestHyperparams {
        n_trees: 20,
        ..Default::default()
    };
    c.bench_function("fit 20 trees, 2000x20", |b| {
        b.iter(|| fit(black_box(&d), &h).unwrap())
    });

    let model = fit(&d, &h).unwrap();
    c.bench_function("predict 2000 rows", |b| {
        b.iter(|| model.predict_proba(black_box(d.features())).unwrap())
    });
}

fn experiment(c: &mut Criterion) {
    let d = fixture(1000, 20, 2);
    let cfg = ExperimentConfig {
        n_bootstraps: 5,
        forest: ForestHyperparams {
            n_trees: 10,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    group.bench_function("5 bootstraps x 10 trees, 1000x20", |b| {
        b.iter(|| bootstrap_experiment(black_box(&d), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, forest_fit, experiment);
criterion_main!(benches);
