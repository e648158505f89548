//! Knockoff copy constructions.
//!
//! Three constructions share the same output contract: a knockoff matrix
//! paired with the decorrelation vector s. The fixed-design construction
//! reproduces the Gram identities exactly; the two model-based
//! constructions sample knockoff rows from the Gaussian conditional law.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::seed::{self, domain};

/// How a knockoff copy was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructionMethod {
    /// Deterministic-Gram construction for fixed designs; needs n >= 2p.
    FixedX,
    /// Sampling from a known Gaussian feature model.
    ModelXGaussian,
    /// Gaussian sampling with mean and covariance estimated from the data.
    SecondOrder,
}

impl ConstructionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstructionMethod::FixedX => "fixed-x",
            ConstructionMethod::ModelXGaussian => "model-x-gaussian",
            ConstructionMethod::SecondOrder => "second-order",
        }
    }
}

impl std::str::FromStr for ConstructionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fixed-x" => Ok(ConstructionMethod::FixedX),
            "model-x-gaussian" => Ok(ConstructionMethod::ModelXGaussian),
            "second-order" => Ok(ConstructionMethod::SecondOrder),
            other => Err(Error::InvalidConfig(format!(
                "unknown construction '{other}' (expected fixed-x, model-x-gaussian or second-order)"
            ))),
        }
    }
}

/// Mean and covariance of the feature distribution for model-based
/// constructions.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    pub mean: Array1<f64>,
    pub covariance: Array2<f64>,
}

/// A knockoff matrix with the data needed to audit it.
#[derive(Debug, Clone)]
pub struct KnockoffCopy {
    /// n x p knockoff features. For `FixedX` these pair with the
    /// column-normalized design returned by [`normalize_columns`].
    pub xtilde: Array2<f64>,
    /// Per-feature decorrelation weights.
    pub s: Array1<f64>,
    pub method: ConstructionMethod,
    /// Covariance (or normalized Gram) the construction worked against.
    pub sigma_used: Array2<f64>,
}

/// Equicorrelated decorrelation weights for a correlation-scale matrix:
/// every feature gets min(2 lambda_min, 1) shrunk by 1e-6 so the joint
/// covariance stays strictly feasible under roundoff.
pub fn equicorrelated_s(sigma: &Array2<f64>) -> Result<Array1<f64>> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(Error::DimensionMismatch {
            what: "covariance",
            expected: p,
            actual: sigma.ncols(),
        });
    }
    let lambda_min = linalg::min_eigenvalue(sigma);
    if lambda_min <= 1e-12 {
        return Err(Error::NonPositiveDefinite {
            min_eigenvalue: lambda_min,
        });
    }
    let value = (2.0 * lambda_min).min(1.0) * (1.0 - 1e-6);
    Ok(Array1::from_elem(p, value))
}

/// Scales each column to unit Euclidean norm. Returns the scaled matrix
/// and the original norms.
pub fn normalize_columns(x: &DesignMatrix) -> Result<(Array2<f64>, Array1<f64>)> {
    let values = x.values();
    let (n, p) = values.dim();
    let mut out = values.clone();
    let mut norms = Array1::zeros(p);
    for j in 0..p {
        let norm = (0..n).map(|i| values[[i, j]].powi(2)).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            return Err(Error::DegenerateColumn {
                index: j,
                name: x.column_names()[j].clone(),
            });
        }
        norms[j] = norm;
        out.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok((out, norms))
}

/// Fixed-design knockoffs: with unit-norm columns and Gram matrix G, the
/// output satisfies xtilde' xtilde = G and xtilde' x = G - diag(s)
/// exactly up to roundoff. The complement basis is drawn from `rng_seed`,
/// so equal inputs give bit-identical output.
pub fn construct_fixed_x(x: &DesignMatrix, rng_seed: u64) -> Result<KnockoffCopy> {
    let (n, p) = (x.n(), x.p());
    if n < 2 * p {
        return Err(Error::InsufficientRows { n, required: 2 * p });
    }
    let (xn, _) = normalize_columns(x)?;
    let min_singular = linalg::min_singular_value(&xn);
    if min_singular <= 1e-10 {
        return Err(Error::RankDeficient { min_singular });
    }
    let mut gram = xn.t().dot(&xn);
    for j in 0..p {
        gram[[j, j]] = 1.0;
    }
    let s = equicorrelated_s(&gram)?;
    let gram_inv = linalg::invert_spd(&gram)?;
    // a = 2 diag(s) - diag(s) G^{-1} diag(s); its PSD factor supplies the
    // component of the knockoffs living outside col(x).
    let mut a = Array2::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            a[[i, j]] = -s[i] * gram_inv[[i, j]] * s[j];
        }
        a[[i, i]] += 2.0 * s[i];
    }
    let f = linalg::psd_factor(&a, 1e-6)?;
    let mut rng = seed::stream(rng_seed, domain::FIXED_X_BASIS, 0);
    let basis = linalg::complement_basis(&xn, &mut rng)?;
    // xtilde = xn (I - G^{-1} diag(s)) + basis * C with C'C = a.
    let mut shift = gram_inv.clone();
    for i in 0..p {
        for j in 0..p {
            shift[[i, j]] *= s[j];
        }
    }
    let identity_minus = Array2::eye(p) - &shift;
    let xtilde = xn.dot(&identity_minus) + basis.dot(&f.t());
    Ok(KnockoffCopy {
        xtilde,
        s,
        method: ConstructionMethod::FixedX,
        sigma_used: gram,
    })
}

fn check_model(p: usize, model: &GaussianModel) -> Result<()> {
    if model.mean.len() != p {
        return Err(Error::DimensionMismatch {
            what: "model mean",
            expected: p,
            actual: model.mean.len(),
        });
    }
    if model.covariance.dim() != (p, p) {
        return Err(Error::DimensionMismatch {
            what: "model covariance",
            expected: p,
            actual: model.covariance.nrows(),
        });
    }
    Ok(())
}

/// Model-based Gaussian knockoffs: each row is sampled from the exact
/// conditional law given the observed row, using a stream seeded by
/// (rng_seed, row index) so results do not depend on thread count.
pub fn construct_model_x_gaussian(
    x: &DesignMatrix,
    model: &GaussianModel,
    rng_seed: u64,
) -> Result<KnockoffCopy> {
    let copy = sample_gaussian_knockoffs(x, model, rng_seed)?;
    Ok(KnockoffCopy {
        method: ConstructionMethod::ModelXGaussian,
        ..copy
    })
}

fn sample_gaussian_knockoffs(
    x: &DesignMatrix,
    model: &GaussianModel,
    rng_seed: u64,
) -> Result<KnockoffCopy> {
    let (n, p) = (x.n(), x.p());
    check_model(p, model)?;
    let sigma = &model.covariance;
    // Decorrelation weights are computed on the correlation scale and
    // mapped back through the marginal variances.
    let mut scale = Array1::zeros(p);
    for j in 0..p {
        let v: f64 = sigma[[j, j]];
        if v <= 1e-12 {
            return Err(Error::NonPositiveDefinite { min_eigenvalue: v });
        }
        scale[j] = v.sqrt();
    }
    let corr = Array2::from_shape_fn((p, p), |(i, j)| sigma[[i, j]] / (scale[i] * scale[j]));
    let s_corr = equicorrelated_s(&corr)?;
    let s = Array1::from_shape_fn(p, |j| s_corr[j] * sigma[[j, j]]);
    let sigma_inv = linalg::invert_spd(sigma)?;
    // b = Sigma^{-1} diag(s); conditional mean mu_i = x_i - (x_i - m) b.
    let mut b = sigma_inv.clone();
    for i in 0..p {
        for j in 0..p {
            b[[i, j]] *= s[j];
        }
    }
    let mut v = Array2::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            v[[i, j]] = -s[i] * sigma_inv[[i, j]] * s[j];
        }
        v[[i, i]] += 2.0 * s[i];
    }
    let f = linalg::psd_factor(&v, 1e-6)?;
    let values = x.values();
    let centered = values
        - &model
            .mean
            .broadcast((n, p))
            .expect("mean broadcasts over rows");
    let mu = values - &centered.dot(&b);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(rng_seed, domain::KNOCKOFF_ROW, i as u64);
            let z: Vec<f64> = (0..p)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            (0..p)
                .map(|j| {
                    let noise: f64 = (0..p).map(|l| f[[j, l]] * z[l]).sum();
                    mu[[i, j]] + noise
                })
                .collect()
        })
        .collect();
    let mut xtilde = Array2::zeros((n, p));
    for (i, row) in rows.iter().enumerate() {
        for j in 0..p {
            xtilde[[i, j]] = row[j];
        }
    }
    Ok(KnockoffCopy {
        xtilde,
        s,
        method: ConstructionMethod::ModelXGaussian,
        sigma_used: sigma.clone(),
    })
}

/// Gaussian knockoffs against a model estimated from the data itself:
/// column means plus a diagonal-shrunk sample covariance
/// (1 - gamma) S + gamma diag(S) with gamma = min(1, 0.5 p / n).
pub fn construct_second_order(x: &DesignMatrix, rng_seed: u64) -> Result<KnockoffCopy> {
    let (n, p) = (x.n(), x.p());
    if n < 10 {
        return Err(Error::InsufficientRows { n, required: 10 });
    }
    let values = x.values();
    let mean = Array1::from_shape_fn(p, |j| values.column(j).mean().unwrap());
    let centered = values - &mean.broadcast((n, p)).expect("mean broadcasts");
    let sample_cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    for j in 0..p {
        if sample_cov[[j, j]] <= 1e-12 {
            return Err(Error::DegenerateColumn {
                index: j,
                name: x.column_names()[j].clone(),
            });
        }
    }
    let gamma = (0.5 * p as f64 / n as f64).min(1.0);
    let mut shrunk = sample_cov.clone();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                shrunk[[i, j]] *= 1.0 - gamma;
            }
        }
    }
    let model = GaussianModel {
        mean,
        covariance: shrunk,
    };
    let copy = sample_gaussian_knockoffs(x, &model, rng_seed)?;
    Ok(KnockoffCopy {
        method: ConstructionMethod::SecondOrder,
        ..copy
    })
}
