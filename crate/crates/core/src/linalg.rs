//! Dense linear-algebra helpers shared by the constructions.
//!
//! Data lives in `ndarray`; decompositions (symmetric eigen, Cholesky, QR,
//! SVD) are delegated to `nalgebra` through the conversions here. Matrices
//! in this crate are small (p up to a few hundred), so copies at the
//! boundary are negligible.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigenvalues (ascending) and matching eigenvectors of a symmetric matrix.
/// The input is symmetrized first to absorb roundoff asymmetry.
pub fn sym_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let m = to_na(a);
    let sym = (&m + m.transpose()) * 0.5;
    let decomp = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..decomp.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| decomp.eigenvalues[i].total_cmp(&decomp.eigenvalues[j]));
    let p = order.len();
    let values = Array1::from_iter(order.iter().map(|&i| decomp.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((p, p), |(i, j)| decomp.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    let (values, _) = sym_eigen(a);
    values[0]
}

pub fn min_singular_value(a: &Array2<f64>) -> f64 {
    let sv = to_na(a).singular_values();
    sv.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn invert_spd(a: &Array2<f64>) -> Result<Array2<f64>> {
    let m = to_na(a);
    let sym = (&m + m.transpose()) * 0.5;
    let chol = sym.cholesky().ok_or_else(|| Error::NonPositiveDefinite {
        min_eigenvalue: min_eigenvalue(a),
    })?;
    Ok(from_na(&chol.inverse()))
}

/// A factor F with F Fᵀ = A for a symmetric positive semidefinite matrix.
///
/// Eigenvalues in [-tol, 0) are clipped to zero; an eigenvalue below -tol
/// means the matrix is materially indefinite and is an error.
pub fn psd_factor(a: &Array2<f64>, tol: f64) -> Result<Array2<f64>> {
    let (values, vectors) = sym_eigen(a);
    if values[0] < -tol {
        return Err(Error::NonPositiveDefinite {
            min_eigenvalue: values[0],
        });
    }
    let p = values.len();
    let mut f = vectors;
    for j in 0..p {
        let scale = values[j].max(0.0).sqrt();
        f.column_mut(j).mapv_inplace(|v| v * scale);
    }
    Ok(f)
}

/// An n x p orthonormal basis of the orthogonal complement of col(x),
/// drawn deterministically from `rng`. Requires n >= 2p and x of full
/// column rank: the QR of [x | G] with Gaussian G then yields trailing
/// Q columns that are orthonormal and orthogonal to col(x).
pub fn complement_basis<R: Rng>(x: &Array2<f64>, rng: &mut R) -> Result<Array2<f64>> {
    let (n, p) = x.dim();
    if n < 2 * p {
        return Err(Error::InsufficientRows { n, required: 2 * p });
    }
    let mut aug = DMatrix::zeros(n, 2 * p);
    for i in 0..n {
        for j in 0..p {
            aug[(i, j)] = x[[i, j]];
        }
    }
    for j in p..2 * p {
        for i in 0..n {
            aug[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let q = aug.qr().q();
    let basis = Array2::from_shape_fn((n, p), |(i, j)| q[(i, p + j)]);
    // Roundoff leaves residual projections ~1e-15; anything larger means
    // the augmented matrix was rank deficient (probability-zero draw).
    let mut max_dot = 0.0_f64;
    for j in 0..p {
        for l in 0..p {
            let dot: f64 = (0..n).map(|i| basis[[i, j]] * x[[i, l]]).sum();
            max_dot = max_dot.max(dot.abs());
        }
    }
    if max_dot > 1e-8 {
        return Err(Error::RankDeficient {
            min_singular: min_singular_value(x),
        });
    }
    Ok(basis)
}
