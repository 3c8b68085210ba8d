use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tva_core::experiments::{run_forecast_experiments, run_predictor_experiments, ExperimentConfig};
use tva_core::valet::{generate_trace, to_idle_series, to_regression_dataset, VolatilityConfig, IDLE_INTERVAL_SECONDS};
use tva_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn forecast(c: &mut Criterion) {
    let trace = generate_trace(1440, 3, &VolatilityConfig::default()).unwrap();
    let idle = to_idle_series(&trace, IDLE_INTERVAL_SECONDS).unwrap();
    let mut group = c.benchmark_group("forecast_experiments");
    for (name, mode) in MODES {
        let cfg = ExperimentConfig::new(100, 42).with_execution(mode);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_forecast_experiments(black_box(&idle), cfg).unwrap())
        });
    }
    group.finish();
}

fn predictors(c: &mut Criterion) {
    let trace = generate_trace(1440, 3, &VolatilityConfig::default()).unwrap();
    let ds = to_regression_dataset(&trace).unwrap();
    let mut group = c.benchmark_group("predictor_experiments");
    group.sample_size(20);
    for (name, mode) in MODES {
        let cfg = ExperimentConfig::new(100, 42).with_execution(mode);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_predictor_experiments(black_box(&ds.design), &ds.latency, 5.0, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forecast, predictors);
criterion_main!(benches);
