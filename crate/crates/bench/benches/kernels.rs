use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fmwarm::{
    eigh, low_rank_init, predicted_rank, train, EnsembleParams, FmSign, SpinConfig, TrainConfig,
};
use fmwarm_bench::{dataset, sk_instance};

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("fm_forward");
    for n in [10, 50, 100] {
        let model = sk_instance(n, 0.1);
        let p = low_rank_init(&model, n / 2, FmSign::Negative).unwrap();
        let x = SpinConfig::all_up(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| p.forward(black_box(&x)))
        });
    }
    group.finish();
}

fn eigendecomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigh");
    for n in [10, 50, 100] {
        let model = sk_instance(n, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| eigh(black_box(model.j())).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let model = sk_instance(10, 0.1);
    let p0 = low_rank_init(&model, 4, FmSign::Negative).unwrap();
    let cfg = TrainConfig {
        epochs: 100,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train_100_epochs");
    for d in [10, 100, 1000] {
        let data = dataset(&model, d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| train(black_box(&p0), &data, &model, &cfg).unwrap())
        });
    }
    group.finish();
}

fn rank_prediction(c: &mut Criterion) {
    let e = EnsembleParams::from_sk(50, 1.0, 0.1).unwrap();
    c.bench_function("predicted_rank", |b| {
        b.iter(|| predicted_rank(black_box(&e), 0.15).unwrap())
    });
}

criterion_group!(
    benches,
    forward,
    eigendecomposition,
    training,
    rank_prediction
);
criterion_main!(benches);
