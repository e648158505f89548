//! Data-dependent threshold and final selection.

use ndarray::Array1;

use crate::combine::FilterStats;
use crate::error::{Error, Result};

/// Selection outcome at the chosen threshold.
#[derive(Debug, Clone)]
pub struct SelectionReport {
    /// Selected feature indices, ascending, 0-based.
    pub selected: Vec<usize>,
    /// Chosen threshold; +inf when no threshold qualifies (empty selection).
    pub threshold: f64,
    pub plus: bool,
    pub q: f64,
    /// Estimated false discovery proportion at `threshold` (0 when +inf).
    pub fdp_estimate: f64,
    /// The statistics that were thresholded.
    pub stats: FilterStats,
}

/// Ratio of statistics at or below -t to those at or above t (floor 1).
pub fn fdp_estimate(w: &Array1<f64>, t: f64) -> f64 {
    let neg = w.iter().filter(|&&v| v <= -t).count();
    let pos = w.iter().filter(|&&v| v >= t).count();
    neg as f64 / pos.max(1) as f64
}

fn check_w(w: &Array1<f64>) -> Result<()> {
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "statistics contain non-finite entries".into(),
        ));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidQ { q });
    }
    Ok(())
}

/// Smallest magnitude t among the nonzero |w| values whose estimated
/// ratio is at most q; +inf when none qualifies. The plus variant adds 1
/// to the numerator, which is what gives finite-sample FDR control.
pub fn knockoff_threshold(w: &Array1<f64>, q: f64, plus: bool) -> Result<f64> {
    check_w(w)?;
    check_q(q)?;
    let mut candidates: Vec<f64> = w.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    for t in candidates {
        let neg = w.iter().filter(|&&v| v <= -t).count();
        let pos = w.iter().filter(|&&v| v >= t).count();
        let numerator = if plus { neg + 1 } else { neg } as f64;
        if numerator / pos.max(1) as f64 <= q {
            return Ok(t);
        }
    }
    Ok(f64::INFINITY)
}

/// Thresholds the statistics and reports every feature with w >= t.
pub fn select(stats: &FilterStats, q: f64, plus: bool) -> Result<SelectionReport> {
    let threshold = knockoff_threshold(&stats.w, q, plus)?;
    let selected: Vec<usize> = if threshold.is_finite() {
        (0..stats.w.len())
            .filter(|&j| stats.w[j] >= threshold)
            .collect()
    } else {
        Vec::new()
    };
    let fdp = if threshold.is_finite() {
        fdp_estimate(&stats.w, threshold)
    } else {
        0.0
    };
    Ok(SelectionReport {
        selected,
        threshold,
        plus,
        q,
        fdp_estimate: fdp,
        stats: stats.clone(),
    })
}
