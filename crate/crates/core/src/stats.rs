//! Per-study feature statistics from penalized fits on [x | knockoff].

use ndarray::{s, Array1, Array2};

use crate::design::Experiment;
use crate::error::{Error, Result};
use crate::knockoff::{normalize_columns, ConstructionMethod, KnockoffCopy};
use crate::lasso;

/// How the (z, ztilde) pair was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    /// Absolute coefficients at a cross-validated penalty.
    AbsCoef,
    /// Largest grid penalty at which each coordinate enters the path.
    PathEntry,
}

/// Nonnegative importance scores for the p features and their knockoffs.
#[derive(Debug, Clone)]
pub struct ZStats {
    pub z: Array1<f64>,
    pub ztilde: Array1<f64>,
    /// Penalty the scores were read at (path end for `PathEntry`).
    pub lambda_used: f64,
    pub kind: StatisticKind,
}

/// Stacks the design and its knockoffs into one n x 2p matrix. Fixed-design
/// knockoffs pair with the column-normalized design, so that scale is used
/// on the left block; the fit standardizes columns anyway, which keeps
/// every statistic invariant to the choice.
pub fn assemble_design(exp: &Experiment, knockoffs: &KnockoffCopy) -> Result<Array2<f64>> {
    let (n, p) = (exp.x.n(), exp.x.p());
    if knockoffs.xtilde.dim() != (n, p) {
        return Err(Error::DimensionMismatch {
            what: "knockoff matrix rows x columns",
            expected: n * p,
            actual: knockoffs.xtilde.nrows() * knockoffs.xtilde.ncols(),
        });
    }
    let left = if knockoffs.method == ConstructionMethod::FixedX {
        normalize_columns(&exp.x)?.0
    } else {
        exp.x.values().clone()
    };
    let mut out = Array2::zeros((n, 2 * p));
    out.slice_mut(s![.., ..p]).assign(&left);
    out.slice_mut(s![.., p..]).assign(&knockoffs.xtilde);
    Ok(out)
}

/// Absolute-coefficient statistics: cross-validate the penalty on the
/// stacked design, refit at the winner, and read |coefficient| for each
/// original column and its knockoff partner.
pub fn abs_coef_stats(exp: &Experiment, knockoffs: &KnockoffCopy, rng_seed: u64) -> Result<ZStats> {
    let design = assemble_design(exp, knockoffs)?;
    let cv = lasso::cross_validate_lambda(&design, &exp.y, exp.family, 5, rng_seed)?;
    let fit = lasso::lasso_path_fit(&design, &exp.y, exp.family, cv.lambda)?;
    let p = exp.x.p();
    Ok(ZStats {
        z: Array1::from_shape_fn(p, |j| fit.coefficients[j].abs()),
        ztilde: Array1::from_shape_fn(p, |j| fit.coefficients[p + j].abs()),
        lambda_used: cv.lambda,
        kind: StatisticKind::AbsCoef,
    })
}

/// Path-entry statistics: the largest grid penalty at which each column
/// becomes active along the warm-started path (0 for never-active).
pub fn path_entry_stats(exp: &Experiment, knockoffs: &KnockoffCopy) -> Result<ZStats> {
    let design = assemble_design(exp, knockoffs)?;
    let (entry, grid) = lasso::path_entry_values(&design, &exp.y, exp.family)?;
    let p = exp.x.p();
    Ok(ZStats {
        z: Array1::from_shape_fn(p, |j| entry[j]),
        ztilde: Array1::from_shape_fn(p, |j| entry[p + j]),
        lambda_used: *grid.last().expect("grid is non-empty"),
        kind: StatisticKind::PathEntry,
    })
}
