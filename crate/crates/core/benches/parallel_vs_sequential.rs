//! Grid search and one-vs-rest training on one thread versus the full pool.
//! Build with `--no-default-features` to time the sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lupi_core::data::{make_synthetic_lupi, SyntheticSpec};
use lupi_core::margin_transfer::MarginTransferConfig;
use lupi_core::method::{Method, TrainSettings};
use lupi_core::model_selection::{cross_validate, CvGrid, CvPlan, WIDE_GRID};
use lupi_core::multiclass::{train_ovr, OvrTrainer};
use lupi_core::par;

fn pools() -> [(&'static str, usize); 2] {
    [("sequential", 1), ("parallel", 0)]
}

fn bench_cross_validate(c: &mut Criterion) {
    let data = make_synthetic_lupi(&SyntheticSpec {
        n: 120,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let grid = CvGrid::new(WIDE_GRID[..4].to_vec(), vec![0.1, 1.0]).unwrap();
    let plan = CvPlan::binary(7);
    let settings = TrainSettings::default();
    let mut group = c.benchmark_group("cross_validate");
    group.sample_size(10);
    for method in [Method::Svm, Method::MarginTransfer] {
        for (name, jobs) in pools() {
            group.bench_function(BenchmarkId::new(name, method), |b| {
                b.iter(|| par::with_jobs(jobs, || cross_validate(&data, method, &grid, &plan, &settings).unwrap()))
            });
        }
    }
    group.finish();
}

fn bench_ovr(c: &mut Criterion) {
    let mut data = make_synthetic_lupi(&SyntheticSpec {
        n: 300,
        ..SyntheticSpec::default()
    })
    .unwrap();
    // Round-robin labels: five classes, one binary problem each.
    for (i, label) in data.y.iter_mut().enumerate() {
        *label = (i % 5) as i64;
    }
    let trainer = OvrTrainer::MarginTransfer(MarginTransferConfig::new(1.0, 1.0));
    let mut group = c.benchmark_group("train_ovr");
    group.sample_size(10);
    for (name, jobs) in pools() {
        group.bench_function(name, |b| b.iter(|| par::with_jobs(jobs, || train_ovr(&data, &trainer).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, bench_cross_validate, bench_ovr);
criterion_main!(benches);
