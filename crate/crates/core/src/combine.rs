//! Combining per-study feature statistics into one signed vector.
//!
//! Every combiner here produces W statistics whose sign flips exactly
//! when one study's (z, ztilde) pair is swapped on a feature and is
//! unchanged elsewhere. That anti-symmetry is what makes the selection
//! threshold valid, so the implementations are arranged to preserve it
//! bitwise, not merely up to roundoff: parity sums accumulate their
//! monomials in value order, and the remaining combiners negate through
//! exact float operations (sign flips of products, symmetric maxima).

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::stats::ZStats;

/// Maximum study count for the parity enumeration (2^K monomials).
pub const MAX_PARITY_STUDIES: usize = 20;

/// Available combiners. `ProductDiff` multiplies per-study differences;
/// the `Oscf*` pair first forms the even/odd parity statistics and then
/// applies a flip-sign map; the `Direct*` family multiplies a magnitude
/// aggregate by the product of per-study difference signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerSpec {
    ProductDiff,
    OscfDiff,
    OscfMax,
    DirectMaxSum,
    DirectMaxMax,
    DirectDiffSum,
    DirectDiffMax,
    DirectSumSum,
    DirectSumMax,
}

impl CombinerSpec {
    pub const ALL: [CombinerSpec; 9] = [
        CombinerSpec::ProductDiff,
        CombinerSpec::OscfDiff,
        CombinerSpec::OscfMax,
        CombinerSpec::DirectMaxSum,
        CombinerSpec::DirectMaxMax,
        CombinerSpec::DirectDiffSum,
        CombinerSpec::DirectDiffMax,
        CombinerSpec::DirectSumSum,
        CombinerSpec::DirectSumMax,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CombinerSpec::ProductDiff => "product-diff",
            CombinerSpec::OscfDiff => "oscf-diff",
            CombinerSpec::OscfMax => "oscf-max",
            CombinerSpec::DirectMaxSum => "direct-max-sum",
            CombinerSpec::DirectMaxMax => "direct-max-max",
            CombinerSpec::DirectDiffSum => "direct-diff-sum",
            CombinerSpec::DirectDiffMax => "direct-diff-max",
            CombinerSpec::DirectSumSum => "direct-sum-sum",
            CombinerSpec::DirectSumMax => "direct-sum-max",
        }
    }
}

impl std::str::FromStr for CombinerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CombinerSpec::ALL
            .iter()
            .find(|c| c.as_str() == s.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown combiner '{s}' (expected one of {})",
                    CombinerSpec::ALL.map(|c| c.as_str()).join(", ")
                ))
            })
    }
}

/// Signed per-feature statistics ready for thresholding.
#[derive(Debug, Clone)]
pub struct FilterStats {
    pub w: Array1<f64>,
    pub combiner: CombinerSpec,
}

fn check_studies(stats: &[ZStats]) -> Result<usize> {
    let first = stats.first().ok_or_else(|| {
        Error::InvalidConfig("at least one study's statistics are required".into())
    })?;
    let p = first.z.len();
    for s in stats {
        if s.z.len() != p || s.ztilde.len() != p {
            return Err(Error::DimensionMismatch {
                what: "statistic length",
                expected: p,
                actual: s.z.len().max(s.ztilde.len()),
            });
        }
    }
    Ok(p)
}

/// Even/odd parity combination across studies. For each feature, the 2^K
/// monomials pick z (bit set) or ztilde (bit clear) per study; monomials
/// whose picked-z count has the same parity as K sum to the first output,
/// the rest to the second. Monomials are summed in value order so that
/// swapping one study's pair permutes the two sums exactly.
pub fn oscf_even_odd(stats: &[ZStats]) -> Result<(Array1<f64>, Array1<f64>)> {
    let p = check_studies(stats)?;
    let k = stats.len();
    if k > MAX_PARITY_STUDIES {
        return Err(Error::KTooLarge {
            k,
            max: MAX_PARITY_STUDIES,
        });
    }
    let mut even = Array1::zeros(p);
    let mut odd = Array1::zeros(p);
    let mut even_terms: Vec<f64> = Vec::with_capacity(1 << (k - 1));
    let mut odd_terms: Vec<f64> = Vec::with_capacity(1 << (k - 1));
    for j in 0..p {
        even_terms.clear();
        odd_terms.clear();
        for mask in 0u32..(1u32 << k) {
            let mut product = 1.0_f64;
            for (bit, s) in stats.iter().enumerate() {
                product *= if mask & (1 << bit) != 0 {
                    s.z[j]
                } else {
                    s.ztilde[j]
                };
            }
            if (mask.count_ones() as usize) % 2 == k % 2 {
                even_terms.push(product);
            } else {
                odd_terms.push(product);
            }
        }
        even_terms.sort_by(f64::total_cmp);
        odd_terms.sort_by(f64::total_cmp);
        even[j] = even_terms.iter().sum();
        odd[j] = odd_terms.iter().sum();
    }
    Ok((even, odd))
}

/// Difference flip-sign map: w = z - ztilde.
pub fn flip_sign_diff(z: &Array1<f64>, ztilde: &Array1<f64>) -> Array1<f64> {
    z - ztilde
}

/// Signed-maximum flip-sign map: the larger of the pair, negated when the
/// knockoff side wins; ties keep the positive sign.
pub fn flip_sign_signed_max(z: &Array1<f64>, ztilde: &Array1<f64>) -> Array1<f64> {
    Array1::from_shape_fn(
        z.len(),
        |j| {
            if z[j] < ztilde[j] {
                -ztilde[j]
            } else {
                z[j]
            }
        },
    )
}

fn sign_or_positive(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn direct_combine<F>(stats: &[ZStats], p: usize, magnitude: F) -> Array1<f64>
where
    F: Fn(&[ZStats], usize) -> f64,
{
    Array1::from_shape_fn(p, |j| {
        let mut sign = 1.0;
        for s in stats {
            sign *= sign_or_positive(s.z[j] - s.ztilde[j]);
        }
        sign * magnitude(stats, j)
    })
}

/// Applies the chosen combiner to K studies' statistics.
pub fn combine(stats: &[ZStats], spec: CombinerSpec) -> Result<FilterStats> {
    let p = check_studies(stats)?;
    let w = match spec {
        CombinerSpec::ProductDiff => {
            Array1::from_shape_fn(p, |j| stats.iter().map(|s| s.z[j] - s.ztilde[j]).product())
        }
        CombinerSpec::OscfDiff => {
            let (even, odd) = oscf_even_odd(stats)?;
            flip_sign_diff(&even, &odd)
        }
        CombinerSpec::OscfMax => {
            let (even, odd) = oscf_even_odd(stats)?;
            flip_sign_signed_max(&even, &odd)
        }
        CombinerSpec::DirectMaxSum => direct_combine(stats, p, |ss, j| {
            ss.iter().map(|s| s.z[j].max(s.ztilde[j])).sum()
        }),
        CombinerSpec::DirectMaxMax => direct_combine(stats, p, |ss, j| {
            ss.iter()
                .map(|s| s.z[j].max(s.ztilde[j]))
                .fold(f64::NEG_INFINITY, f64::max)
        }),
        CombinerSpec::DirectDiffSum => direct_combine(stats, p, |ss, j| {
            ss.iter().map(|s| (s.z[j] - s.ztilde[j]).abs()).sum()
        }),
        CombinerSpec::DirectDiffMax => direct_combine(stats, p, |ss, j| {
            ss.iter()
                .map(|s| (s.z[j] - s.ztilde[j]).abs())
                .fold(f64::NEG_INFINITY, f64::max)
        }),
        CombinerSpec::DirectSumSum => direct_combine(stats, p, |ss, j| {
            ss.iter().map(|s| s.z[j] + s.ztilde[j]).sum()
        }),
        CombinerSpec::DirectSumMax => direct_combine(stats, p, |ss, j| {
            ss.iter()
                .map(|s| s.z[j] + s.ztilde[j])
                .fold(f64::NEG_INFINITY, f64::max)
        }),
    };
    Ok(FilterStats { w, combiner: spec })
}
