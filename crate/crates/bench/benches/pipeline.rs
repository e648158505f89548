use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array1;
use rand::Rng;
use simknock::{combine, construct_fixed_x, knockoff_threshold, lasso_fit, CombinerSpec, Family};
use simknock_bench::bench_experiment;

fn bench_lasso(c: &mut Criterion) {
    let exp = bench_experiment(200, 50, 1);
    c.bench_function("lasso_fit_200x50", |b| {
        b.iter(|| lasso_fit(exp.x.values(), &exp.y, Family::Gaussian, 0.05).unwrap())
    });
}

fn bench_knockoff(c: &mut Criterion) {
    let exp = bench_experiment(200, 50, 2);
    c.bench_function("fixed_x_knockoffs_200x50", |b| {
        b.iter(|| construct_fixed_x(&exp.x, 7).unwrap())
    });
}

fn bench_combine_and_filter(c: &mut Criterion) {
    let mut rng = simknock::seed::stream(3, 0, 0);
    let stats: Vec<simknock::ZStats> = (0..3)
        .map(|_| simknock::ZStats {
            z: Array1::from_shape_fn(500, |_| rng.gen::<f64>()),
            ztilde: Array1::from_shape_fn(500, |_| rng.gen::<f64>()),
            lambda_used: 0.1,
            kind: simknock::StatisticKind::AbsCoef,
        })
        .collect();
    c.bench_function("oscf_max_combine_k3_p500", |b| {
        b.iter_batched(
            || stats.clone(),
            |s| combine::combine(&s, CombinerSpec::OscfMax).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let w = combine::combine(&stats, CombinerSpec::OscfMax).unwrap();
    c.bench_function("knockoff_threshold_p500", |b| {
        b.iter(|| knockoff_threshold(&w.w, 0.2, false).unwrap())
    });
}

criterion_group!(
    benches,
    bench_lasso,
    bench_knockoff,
    bench_combine_and_filter
);
criterion_main!(benches);
