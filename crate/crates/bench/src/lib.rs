//! Shared problem generators for the criterion benchmarks.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use simknock::{DesignMatrix, Experiment, Family};

/// Gaussian study with a handful of planted signals, sized for benches.
pub fn bench_experiment(n: usize, p: usize, seed: u64) -> Experiment {
    let mut rng = simknock::seed::stream(seed, 0, 0);
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    let y = Array1::from_shape_fn(n, |i| {
        let signal: f64 = (0..5.min(p)).map(|j| x[[i, j]] * 1.5).sum();
        signal + rng.sample::<f64, _>(StandardNormal)
    });
    Experiment::new(y, DesignMatrix::from_array(x).unwrap(), Family::Gaussian).unwrap()
}
