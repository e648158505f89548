//! L1-penalized regression by coordinate descent.
//!
//! The solver minimizes (1/2n)||y - b0 - X b||^2 + lambda ||b||_1 for the
//! Gaussian family and (1/n) sum of logistic negative log-likelihood plus
//! lambda ||b||_1 for the binomial family. Columns are standardized to
//! mean 0 and variance 1 (1/n convention) internally; coefficients are
//! reported on that standardized scale. The intercept is never penalized:
//! Gaussian fits center the response, binomial fits carry an explicit
//! intercept through the reweighting loop.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::design::Family;
use crate::error::{Error, Result};
use crate::seed::{self, domain};

const COEF_TOL: f64 = 1e-7;
const KKT_TOL: f64 = 5e-7;
const MAX_SWEEPS: usize = 10_000;
const MAX_IRLS: usize = 50;
const MIN_WEIGHT: f64 = 1e-5;

/// Solution of one penalized fit.
#[derive(Debug, Clone)]
pub struct LassoFit {
    /// Coefficients on the standardized-column scale.
    pub coefficients: Array1<f64>,
    /// Unpenalized intercept (response mean for the Gaussian family).
    pub intercept: f64,
    pub lambda: f64,
    /// False when the sweep cap was hit; callers must reject such fits.
    pub converged: bool,
}

/// Cross-validation summary: the chosen penalty plus the whole deviance
/// curve for inspection.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub lambda: f64,
    pub grid: Vec<f64>,
    /// Held-out deviance per grid value, averaged over all observations.
    pub mean_deviance: Vec<f64>,
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Columns standardized to mean 0, variance 1 (1/n convention).
pub(crate) struct Standardized {
    pub xs: Array2<f64>,
    pub means: Array1<f64>,
    pub sds: Array1<f64>,
}

pub(crate) fn standardize(x: &Array2<f64>) -> Result<Standardized> {
    let (n, p) = x.dim();
    let mut xs = x.clone();
    let mut means = Array1::zeros(p);
    let mut sds = Array1::zeros(p);
    for j in 0..p {
        let mean = x.column(j).sum() / n as f64;
        let var = x.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if var <= 1e-12 {
            return Err(Error::DegenerateColumn {
                index: j,
                name: format!("column {}", j + 1),
            });
        }
        let sd = var.sqrt();
        means[j] = mean;
        sds[j] = sd;
        xs.column_mut(j).mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(Standardized { xs, means, sds })
}

fn dot(a: ArrayView1<f64>, b: &Array1<f64>) -> f64 {
    a.dot(b)
}

/// One full or active-set sweep of Gaussian coordinate descent. Returns
/// the largest coefficient change. `xs` columns satisfy x'x = n.
fn gaussian_sweep(
    xs: &Array2<f64>,
    lambda: f64,
    beta: &mut Array1<f64>,
    residual: &mut Array1<f64>,
    coords: &[usize],
) -> f64 {
    let n = xs.nrows() as f64;
    let mut max_delta = 0.0_f64;
    for &j in coords {
        let col = xs.column(j);
        let z = dot(col, residual) / n + beta[j];
        let new = soft_threshold(z, lambda);
        let delta = new - beta[j];
        if delta != 0.0 {
            for (r, x) in residual.iter_mut().zip(col.iter()) {
                *r -= delta * x;
            }
            beta[j] = new;
        }
        max_delta = max_delta.max(delta.abs());
    }
    max_delta
}

fn gaussian_kkt_residual(
    xs: &Array2<f64>,
    lambda: f64,
    beta: &Array1<f64>,
    residual: &Array1<f64>,
) -> f64 {
    let n = xs.nrows() as f64;
    let mut worst = 0.0_f64;
    for j in 0..xs.ncols() {
        let g = dot(xs.column(j), residual) / n;
        let viol = if beta[j] > 0.0 {
            (g - lambda).abs()
        } else if beta[j] < 0.0 {
            (g + lambda).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(viol);
    }
    worst
}

/// Coordinate descent to KKT stationarity at one penalty value. Warm
/// starts from the incoming `beta`. Returns false if the sweep budget ran
/// out before both the coefficient-change and KKT tolerances were met.
/// Finishes a nearly-converged fit by active-set pivoting with a line
/// search: on a fixed sign face the minimizer solves a linear system;
/// step toward that solution only as far as the first sign change, zero
/// the crossing coordinate, and re-solve. Each step decreases the
/// objective, so the loop cannot cycle. Once the face solution is
/// sign-consistent, inactive coordinates whose gradient beats the
/// penalty join one at a time. On the near-collinear augmented designs
/// knockoffs produce, plain coordinate descent can crawl along a
/// low-curvature valley for millions of sweeps; this lands in a handful
/// of solves. Returns false (leaving `beta` untouched) if no consistent
/// face is found within the round budget.
fn gaussian_active_jump(
    xs: &Array2<f64>,
    yc: &Array1<f64>,
    lambda: f64,
    beta: &mut Array1<f64>,
) -> bool {
    let n = xs.nrows() as f64;
    let p = xs.ncols();
    let mut current = beta.clone();
    let mut face: Vec<usize> = (0..p).filter(|&j| current[j] != 0.0).collect();
    if face.is_empty() {
        return false;
    }
    let xty: Vec<f64> = (0..p).map(|j| xs.column(j).dot(yc) / n).collect();
    for _round in 0..(8 * p + 20) {
        let m = face.len();
        let mut gram = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut rhs = nalgebra::DVector::<f64>::zeros(m);
        for (ai, &j) in face.iter().enumerate() {
            rhs[ai] = xty[j] - lambda * current[j].signum();
            for (bi, &l) in face.iter().enumerate().skip(ai) {
                let g = xs.column(j).dot(&xs.column(l)) / n;
                gram[(ai, bi)] = g;
                gram[(bi, ai)] = g;
            }
        }
        let chol = match gram.cholesky() {
            Some(c) => c,
            None => return false,
        };
        let sol = chol.solve(&rhs);
        // Largest step toward the face solution that keeps every sign.
        let mut t = 1.0_f64;
        for (ai, &j) in face.iter().enumerate() {
            if sol[ai] == 0.0 || sol[ai].signum() != current[j].signum() {
                let denom = current[j] - sol[ai];
                if denom != 0.0 {
                    t = t.min(current[j] / denom);
                }
            }
        }
        if t < 1.0 {
            for (ai, &j) in face.iter().enumerate() {
                current[j] += t * (sol[ai] - current[j]);
            }
            // Coordinates that crossed zero leave the face.
            face.retain(|&j| {
                if current[j].abs() <= 1e-14 {
                    current[j] = 0.0;
                    false
                } else {
                    true
                }
            });
            if face.is_empty() {
                return false;
            }
            continue;
        }
        for (ai, &j) in face.iter().enumerate() {
            current[j] = sol[ai];
        }
        // Face is sign-consistent; let the worst inactive violator in.
        let residual = yc - &xs.dot(&current);
        let mut worst: Option<(usize, f64)> = None;
        for j in 0..p {
            if current[j] != 0.0 {
                continue;
            }
            let g = xs.column(j).dot(&residual) / n;
            if g.abs() > lambda + 1e-9 && worst.is_none_or(|(_, w)| g.abs() > w) {
                worst = Some((j, g.abs()));
            }
        }
        match worst {
            Some((j, _)) => {
                let g = xs.column(j).dot(&residual) / n;
                current[j] = g.signum() * 1e-12;
                face.push(j);
                face.sort_unstable();
            }
            None => {
                *beta = current;
                return true;
            }
        }
    }
    false
}

fn gaussian_cd(
    xs: &Array2<f64>,
    yc: &Array1<f64>,
    lambda: f64,
    beta: &mut Array1<f64>,
    sweeps: &mut usize,
) -> bool {
    let p = xs.ncols();
    let all: Vec<usize> = (0..p).collect();
    let mut residual = yc - &xs.dot(beta);
    loop {
        let max_delta = gaussian_sweep(xs, lambda, beta, &mut residual, &all);
        *sweeps += 1;
        if *sweeps > MAX_SWEEPS {
            return false;
        }
        if max_delta < COEF_TOL {
            // Incremental residual updates drift; refresh before judging
            // stationarity.
            residual = yc - &xs.dot(beta);
            if gaussian_kkt_residual(xs, lambda, beta, &residual) <= KKT_TOL {
                return true;
            }
            continue;
        }
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        let mut check_at = *sweeps + 100;
        let mut d_at_check = f64::INFINITY;
        loop {
            let d = gaussian_sweep(xs, lambda, beta, &mut residual, &active);
            *sweeps += 1;
            if *sweeps > MAX_SWEEPS {
                return false;
            }
            if d < COEF_TOL {
                break;
            }
            if *sweeps >= check_at {
                // Healthy descent at least halves the step between
                // checkpoints; anything slower is the collinear crawl,
                // worth an exact solve regardless of the current scale.
                let stalled = d < 1e-5 || d > 0.5 * d_at_check;
                if stalled && gaussian_active_jump(xs, yc, lambda, beta) {
                    residual = yc - &xs.dot(beta);
                    break;
                }
                check_at = *sweeps + 100;
                d_at_check = d;
            }
        }
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn binomial_kkt_residual(
    xs: &Array2<f64>,
    y: &Array1<f64>,
    lambda: f64,
    beta: &Array1<f64>,
    intercept: f64,
) -> f64 {
    let n = xs.nrows() as f64;
    let eta = xs.dot(beta) + intercept;
    let gap: Array1<f64> = y - &eta.mapv(sigmoid);
    let mut worst = gap.sum().abs() / n;
    for j in 0..xs.ncols() {
        let g = dot(xs.column(j), &gap) / n;
        let viol = if beta[j] > 0.0 {
            (g - lambda).abs()
        } else if beta[j] < 0.0 {
            (g + lambda).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(viol);
    }
    worst
}

/// Penalized logistic regression: iteratively reweighted least squares
/// with a weighted coordinate-descent inner loop. Convergence means the
/// true (non-quadratic) KKT conditions hold.
fn binomial_cd(
    xs: &Array2<f64>,
    y: &Array1<f64>,
    lambda: f64,
    beta: &mut Array1<f64>,
    intercept: &mut f64,
    sweeps: &mut usize,
) -> bool {
    let (n, p) = xs.dim();
    let nf = n as f64;
    for _ in 0..MAX_IRLS {
        let eta = xs.dot(beta) + *intercept;
        let prob = eta.mapv(sigmoid);
        let weights = prob.mapv(|pi| (pi * (1.0 - pi)).max(MIN_WEIGHT));
        // Working residual of the local quadratic model: (y - p) / w.
        let mut residual = Array1::from_shape_fn(n, |i| (y[i] - prob[i]) / weights[i]);
        let weight_sum = weights.sum();
        let wxx: Vec<f64> = (0..p)
            .map(|j| {
                xs.column(j)
                    .iter()
                    .zip(weights.iter())
                    .map(|(x, w)| w * x * x)
                    .sum::<f64>()
                    / nf
            })
            .collect();
        let before = beta.clone();
        let before_intercept = *intercept;
        loop {
            let mut max_delta = 0.0_f64;
            let wr: f64 = weights
                .iter()
                .zip(residual.iter())
                .map(|(w, r)| w * r)
                .sum();
            let d0 = wr / weight_sum;
            if d0 != 0.0 {
                *intercept += d0;
                residual.mapv_inplace(|r| r - d0);
            }
            max_delta = max_delta.max(d0.abs());
            for j in 0..p {
                let col = xs.column(j);
                let grad: f64 = col
                    .iter()
                    .zip(weights.iter())
                    .zip(residual.iter())
                    .map(|((x, w), r)| x * w * r)
                    .sum::<f64>()
                    / nf;
                let z = grad + beta[j] * wxx[j];
                let new = soft_threshold(z, lambda) / wxx[j];
                let delta = new - beta[j];
                if delta != 0.0 {
                    for (r, x) in residual.iter_mut().zip(col.iter()) {
                        *r -= delta * x;
                    }
                    beta[j] = new;
                }
                max_delta = max_delta.max(delta.abs());
            }
            *sweeps += 1;
            if *sweeps > MAX_SWEEPS {
                return false;
            }
            if max_delta < COEF_TOL * 0.1 {
                break;
            }
        }
        let outer_change = beta
            .iter()
            .zip(before.iter())
            .map(|(a, b)| (a - b).abs())
            .fold((*intercept - before_intercept).abs(), f64::max);
        if outer_change < COEF_TOL
            && binomial_kkt_residual(xs, y, lambda, beta, *intercept) <= KKT_TOL
        {
            return true;
        }
    }
    binomial_kkt_residual(xs, y, lambda, beta, *intercept) <= KKT_TOL
}

/// Fits the penalized model at a single penalty value.
pub fn lasso_fit(
    design: &Array2<f64>,
    y: &Array1<f64>,
    family: Family,
    lambda: f64,
) -> Result<LassoFit> {
    if y.len() != design.nrows() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: design.nrows(),
            actual: y.len(),
        });
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "penalty must be finite and nonnegative, got {lambda}"
        )));
    }
    let std = standardize(design)?;
    let mut beta = Array1::zeros(design.ncols());
    let mut sweeps = 0usize;
    let (converged, intercept) = match family {
        Family::Gaussian => {
            let ybar = y.sum() / y.len() as f64;
            let yc = y.mapv(|v| v - ybar);
            let ok = gaussian_cd(&std.xs, &yc, lambda, &mut beta, &mut sweeps);
            (ok, ybar)
        }
        Family::Binomial => {
            let mut intercept = 0.0;
            let ok = binomial_cd(&std.xs, y, lambda, &mut beta, &mut intercept, &mut sweeps);
            (ok, intercept)
        }
    };
    Ok(LassoFit {
        coefficients: beta,
        intercept,
        lambda,
        converged,
    })
}

/// Fits at `lambda` by walking the penalty grid down from above with
/// warm starts and stopping at `lambda`. On the near-collinear augmented
/// designs the filter produces, a cold start at a small penalty can
/// need orders of magnitude more sweeps than the whole warm path, so
/// refits of a cross-validated winner should come through here.
pub fn lasso_path_fit(
    design: &Array2<f64>,
    y: &Array1<f64>,
    family: Family,
    lambda: f64,
) -> Result<LassoFit> {
    if y.len() != design.nrows() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: design.nrows(),
            actual: y.len(),
        });
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "penalty must be finite and nonnegative, got {lambda}"
        )));
    }
    let std = standardize(design)?;
    let ybar = y.sum() / y.len() as f64;
    let yc = y.mapv(|v| v - ybar);
    let mut steps: Vec<f64> = lambda_grid(lambda_max(&std.xs, y))
        .into_iter()
        .filter(|&l| l > lambda)
        .collect();
    steps.push(lambda);
    let mut beta = Array1::zeros(design.ncols());
    let mut intercept = match family {
        Family::Gaussian => ybar,
        Family::Binomial => 0.0,
    };
    for &lam in &steps {
        let mut sweeps = 0usize;
        let ok = match family {
            Family::Gaussian => gaussian_cd(&std.xs, &yc, lam, &mut beta, &mut sweeps),
            Family::Binomial => {
                binomial_cd(&std.xs, y, lam, &mut beta, &mut intercept, &mut sweeps)
            }
        };
        if !ok {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }
    Ok(LassoFit {
        coefficients: beta,
        intercept,
        lambda,
        converged: true,
    })
}

/// 100 log-spaced penalties from lambda_max down to 0.001 lambda_max.
pub fn lambda_grid(lambda_max: f64) -> Vec<f64> {
    let points = 100usize;
    let lo = (0.001 * lambda_max).ln();
    let hi = lambda_max.ln();
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (hi + t * (lo - hi)).exp()
        })
        .collect()
}

/// Smallest penalty that zeroes every coefficient, computed on the
/// standardized columns against the centered response.
pub(crate) fn lambda_max(xs: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let n = xs.nrows() as f64;
    let ybar = y.sum() / n;
    let yc = y.mapv(|v| v - ybar);
    let mut best = 0.0_f64;
    for j in 0..xs.ncols() {
        best = best.max(dot(xs.column(j), &yc).abs() / n);
    }
    best.max(1e-12)
}

/// Fold labels for cross-validation: a seeded permutation of the row
/// indices split into `folds` contiguous chunks. Depends only on
/// (n, folds, rng_seed), never on the feature columns.
pub fn fold_assignment(n: usize, folds: usize, rng_seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::stream(rng_seed, domain::CV_FOLDS, n as u64);
    order.shuffle(&mut rng);
    let mut labels = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        labels[row] = pos * folds / n;
    }
    labels
}

fn rows_subset(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), x.ncols()), |(i, j)| x[[rows[i], j]])
}

fn values_subset(y: &Array1<f64>, rows: &[usize]) -> Array1<f64> {
    Array1::from_shape_fn(rows.len(), |i| y[rows[i]])
}

/// Held-out deviance for one fold across the whole penalty path.
fn fold_deviance(
    design: &Array2<f64>,
    y: &Array1<f64>,
    family: Family,
    grid: &[f64],
    train: &[usize],
    held: &[usize],
) -> Result<Vec<f64>> {
    let xt = rows_subset(design, train);
    let yt = values_subset(y, train);
    let std = standardize(&xt)?;
    let mut beta = Array1::zeros(design.ncols());
    let mut intercept = 0.0;
    let ybar = yt.sum() / yt.len() as f64;
    let yc = yt.mapv(|v| v - ybar);
    // Held-out rows standardized with the training fold's parameters.
    let xh = {
        let raw = rows_subset(design, held);
        let mut xh = raw;
        for j in 0..xh.ncols() {
            let (m, s) = (std.means[j], std.sds[j]);
            xh.column_mut(j).mapv_inplace(|v| (v - m) / s);
        }
        xh
    };
    let yh = values_subset(y, held);
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut sweeps = 0usize;
        let ok = match family {
            Family::Gaussian => gaussian_cd(&std.xs, &yc, lambda, &mut beta, &mut sweeps),
            Family::Binomial => {
                binomial_cd(&std.xs, &yt, lambda, &mut beta, &mut intercept, &mut sweeps)
            }
        };
        if !ok {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
        let eta = xh.dot(&beta);
        let dev = match family {
            Family::Gaussian => eta
                .iter()
                .zip(yh.iter())
                .map(|(e, yv)| (yv - (ybar + e)).powi(2))
                .sum::<f64>(),
            Family::Binomial => eta
                .iter()
                .zip(yh.iter())
                .map(|(e, yv)| {
                    let p = sigmoid(e + intercept).clamp(1e-12, 1.0 - 1e-12);
                    -2.0 * (yv * p.ln() + (1.0 - yv) * (1.0 - p).ln())
                })
                .sum::<f64>(),
        };
        out.push(dev);
    }
    Ok(out)
}

/// Picks the penalty minimizing mean held-out deviance over a seeded
/// fold split; ties resolve toward the larger (sparser) penalty.
pub fn cross_validate_lambda(
    design: &Array2<f64>,
    y: &Array1<f64>,
    family: Family,
    folds: usize,
    rng_seed: u64,
) -> Result<CvResult> {
    let n = design.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: n,
            actual: y.len(),
        });
    }
    if folds < 2 || folds > n {
        return Err(Error::InvalidConfig(format!(
            "fold count must lie in 2..=n ({n}), got {folds}"
        )));
    }
    let std = standardize(design)?;
    let grid = lambda_grid(lambda_max(&std.xs, y));
    let labels = fold_assignment(n, folds, rng_seed);
    let per_fold: Vec<Result<Vec<f64>>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| labels[i] != f).collect();
            let held: Vec<usize> = (0..n).filter(|&i| labels[i] == f).collect();
            fold_deviance(design, y, family, &grid, &train, &held)
        })
        .collect();
    let mut total = vec![0.0_f64; grid.len()];
    for fold in per_fold {
        for (acc, d) in total.iter_mut().zip(fold?.iter()) {
            *acc += d;
        }
    }
    let mean_deviance: Vec<f64> = total.iter().map(|d| d / n as f64).collect();
    // Scan from the largest penalty; strict improvement keeps ties there.
    let mut best = 0usize;
    for (i, d) in mean_deviance.iter().enumerate() {
        if *d < mean_deviance[best] {
            best = i;
        }
    }
    Ok(CvResult {
        lambda: grid[best],
        grid,
        mean_deviance,
    })
}

/// Fits the whole penalty path on standardized data with warm starts and
/// reports, per coordinate, the largest grid penalty at which it is
/// active (0.0 for coordinates that never enter).
pub fn path_entry_values(
    design: &Array2<f64>,
    y: &Array1<f64>,
    family: Family,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let std = standardize(design)?;
    let grid = lambda_grid(lambda_max(&std.xs, y));
    let p = design.ncols();
    let mut beta = Array1::zeros(p);
    let mut intercept = 0.0;
    let ybar = y.sum() / y.len() as f64;
    let yc = y.mapv(|v| v - ybar);
    let mut entry = vec![0.0_f64; p];
    for &lambda in &grid {
        let mut sweeps = 0usize;
        let ok = match family {
            Family::Gaussian => gaussian_cd(&std.xs, &yc, lambda, &mut beta, &mut sweeps),
            Family::Binomial => {
                binomial_cd(&std.xs, y, lambda, &mut beta, &mut intercept, &mut sweeps)
            }
        };
        if !ok {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
        for j in 0..p {
            if entry[j] == 0.0 && beta[j] != 0.0 {
                entry[j] = lambda;
            }
        }
    }
    Ok((entry, grid))
}
