use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lagnet_bench::{model, trajectory};
use lagnet_core::classifiers::{fit_gmm, GMM_MAX_ITERS, GMM_TOL};
use lagnet_core::{
    build_f, build_k, build_t, empirical_lag_moments, error_matrix, simulate,
    stationary_covariance, MlpModel, SimConfig,
};

fn bench_simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for n in [10usize, 50] {
        let (a, noise) = model(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| simulate(&a, &noise, 10_000, &SimConfig::new(2, 0)).unwrap())
        });
    }
    group.finish();
}

fn bench_lag_moments(c: &mut Criterion) {
    let mut group = c.benchmark_group("lag_moments");
    group.sample_size(10);
    let ts = trajectory(20, 10_000, 50, 3);
    group.bench_function("n20_lags0to3", |b| {
        b.iter(|| empirical_lag_moments(&ts, 0, 3).unwrap())
    });
    group.bench_function("n20_lags-50to50", |b| {
        b.iter(|| empirical_lag_moments(&ts, -50, 50).unwrap())
    });
    group.finish();
}

fn bench_analytic(c: &mut Criterion) {
    let (a, noise) = model(30, 4);
    let s: Vec<usize> = (0..20).collect();
    c.bench_function("stationary_covariance_n30", |b| {
        b.iter(|| stationary_covariance(&a, &noise).unwrap())
    });
    c.bench_function("error_matrix_n30", |b| {
        b.iter(|| error_matrix(&a, &noise, &s).unwrap())
    });
}

fn bench_classifiers(c: &mut Criterion) {
    let values: Vec<f64> = (0..1000)
        .map(|i| if i % 3 == 0 { 1.0 } else { 0.0 } + (i as f64 * 0.618).fract() * 0.2)
        .collect();
    c.bench_function("gmm_fit_1000", |b| {
        b.iter(|| fit_gmm(&values, GMM_MAX_ITERS, GMM_TOL).unwrap())
    });

    let ts = trajectory(20, 10_000, 50, 5);
    let m = empirical_lag_moments(&ts, -50, 50).unwrap();
    c.bench_function("k_features_n20", |b| {
        b.iter(|| build_k(&build_f(&m), &build_t(&m).unwrap()).unwrap())
    });
    let features = build_k(&build_f(&m), &build_t(&m).unwrap()).unwrap();
    let net = MlpModel::new(&[features.width(), 32, 32, 1], 0).unwrap();
    c.bench_function("mlp_predict_380_pairs", |b| {
        b.iter(|| lagnet_core::classifiers::ffnn_predict_scaled(&net, &features).unwrap())
    });
}

criterion_group!(
    benches,
    bench_simulation,
    bench_lag_moments,
    bench_analytic,
    bench_classifiers
);
criterion_main!(benches);
