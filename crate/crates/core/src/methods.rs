//! The three selection strategies compared throughout the crate.
//!
//! Simultaneous selection combines per-study statistics with an
//! anti-symmetric combiner and thresholds once, targeting features that
//! carry signal in every study. The two baselines answer the same
//! question naively: pooling stacks all studies into one regression,
//! intersection selects per study and intersects the selected sets.

use ndarray::{Array1, Array2};

use crate::combine::{combine, CombinerSpec};
use crate::design::{check_shared_columns, DesignMatrix, Experiment, Family};
use crate::error::{Error, Result};
use crate::filter::{select, SelectionReport};
use crate::knockoff::{
    construct_fixed_x, construct_model_x_gaussian, construct_second_order, GaussianModel,
    KnockoffCopy,
};
use crate::seed::{self, domain};
use crate::stats::{abs_coef_stats, ZStats};

/// Which strategy produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Simultaneous,
    Pooling,
    Intersection,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Simultaneous => "simultaneous",
            Method::Pooling => "pooling",
            Method::Intersection => "intersection",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simultaneous" => Ok(Method::Simultaneous),
            "pooling" => Ok(Method::Pooling),
            "intersection" => Ok(Method::Intersection),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (expected simultaneous, pooling or intersection)"
            ))),
        }
    }
}

/// Per-study knockoff construction choice.
#[derive(Debug, Clone)]
pub enum ConstructionSpec {
    FixedX,
    SecondOrder,
    ModelXGaussian(GaussianModel),
}

impl ConstructionSpec {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstructionSpec::FixedX => "fixed-x",
            ConstructionSpec::SecondOrder => "second-order",
            ConstructionSpec::ModelXGaussian(_) => "model-x-gaussian",
        }
    }

    fn build(&self, x: &DesignMatrix, rng_seed: u64) -> Result<KnockoffCopy> {
        match self {
            ConstructionSpec::FixedX => construct_fixed_x(x, rng_seed),
            ConstructionSpec::SecondOrder => construct_second_order(x, rng_seed),
            ConstructionSpec::ModelXGaussian(model) => {
                construct_model_x_gaussian(x, model, rng_seed)
            }
        }
    }
}

/// Either one combined report or the per-study reports behind an
/// intersection.
#[derive(Debug, Clone)]
pub enum MethodReport {
    Combined(SelectionReport),
    PerStudy(Vec<SelectionReport>),
}

/// Selection result of one strategy.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    /// Selected feature indices, ascending, 0-based.
    pub selected: Vec<usize>,
    pub report: MethodReport,
}

fn per_study_stats(
    exps: &[Experiment],
    constructions: &[ConstructionSpec],
    rng_seed: u64,
) -> Result<Vec<ZStats>> {
    if constructions.len() != exps.len() {
        return Err(Error::DimensionMismatch {
            what: "construction tags",
            expected: exps.len(),
            actual: constructions.len(),
        });
    }
    exps.iter()
        .zip(constructions)
        .enumerate()
        .map(|(k, (exp, cons))| {
            let study_seed = seed::derive(rng_seed, domain::STUDY, k as u64);
            let ko = cons.build(&exp.x, study_seed)?;
            abs_coef_stats(exp, &ko, study_seed)
        })
        .collect()
}

/// Runs the combined filter: per-study knockoffs and statistics, one
/// combiner, one threshold.
pub fn run_simultaneous(
    exps: &[Experiment],
    constructions: &[ConstructionSpec],
    combiner: CombinerSpec,
    q: f64,
    plus: bool,
    rng_seed: u64,
) -> Result<MethodResult> {
    check_shared_columns(exps)?;
    let stats = per_study_stats(exps, constructions, rng_seed)?;
    let filter_stats = combine(&stats, combiner)?;
    let report = select(&filter_stats, q, plus)?;
    Ok(MethodResult {
        method: Method::Simultaneous,
        selected: report.selected.clone(),
        report: MethodReport::Combined(report),
    })
}

/// Stacks all studies into one regression and runs a single knockoff
/// filter on it. Mixed families are rejected unless `force_continuous`
/// standardizes each study's response and treats everything as Gaussian.
pub fn run_pooling(
    exps: &[Experiment],
    q: f64,
    plus: bool,
    force_continuous: bool,
    rng_seed: u64,
) -> Result<MethodResult> {
    let p = check_shared_columns(exps)?;
    let same_family = exps.iter().all(|e| e.family == exps[0].family);
    if !same_family && !force_continuous {
        return Err(Error::FamilyMismatch);
    }
    let family = if force_continuous {
        Family::Gaussian
    } else {
        exps[0].family
    };
    let n_total: usize = exps.iter().map(|e| e.x.n()).sum();
    let mut x = Array2::zeros((n_total, p));
    let mut y = Array1::zeros(n_total);
    let mut row = 0usize;
    for e in exps {
        let scale = if force_continuous {
            let mean = e.y.sum() / e.y.len() as f64;
            let var = e.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / e.y.len() as f64;
            if var <= 1e-12 {
                return Err(Error::InvalidConfig(
                    "cannot standardize a constant response".into(),
                ));
            }
            Some((mean, var.sqrt()))
        } else {
            None
        };
        for i in 0..e.x.n() {
            for j in 0..p {
                x[[row, j]] = e.x.values()[[i, j]];
            }
            y[row] = match scale {
                Some((m, s)) => (e.y[i] - m) / s,
                None => e.y[i],
            };
            row += 1;
        }
    }
    let pooled = Experiment::new(
        y,
        DesignMatrix::new(x, exps[0].x.column_names().to_vec())?,
        family,
    )?;
    // A Gaussian pooled design keeps the deterministic construction; the
    // binomial case falls back to the estimated-model sampler.
    let cons = if family == Family::Gaussian {
        ConstructionSpec::FixedX
    } else {
        ConstructionSpec::SecondOrder
    };
    let ko = cons.build(&pooled.x, seed::derive(rng_seed, domain::STUDY, 0))?;
    let stats = abs_coef_stats(&pooled, &ko, seed::derive(rng_seed, domain::STUDY, 0))?;
    let filter_stats = combine(std::slice::from_ref(&stats), CombinerSpec::ProductDiff)?;
    let report = select(&filter_stats, q, plus)?;
    Ok(MethodResult {
        method: Method::Pooling,
        selected: report.selected.clone(),
        report: MethodReport::Combined(report),
    })
}

/// Runs an independent knockoff filter per study at the same q and
/// intersects the selected sets.
pub fn run_intersection(
    exps: &[Experiment],
    constructions: &[ConstructionSpec],
    q: f64,
    plus: bool,
    rng_seed: u64,
) -> Result<MethodResult> {
    let p = check_shared_columns(exps)?;
    let stats = per_study_stats(exps, constructions, rng_seed)?;
    let mut reports = Vec::with_capacity(stats.len());
    let mut counts = vec![0usize; p];
    for s in &stats {
        let fs = combine(std::slice::from_ref(s), CombinerSpec::ProductDiff)?;
        let report = select(&fs, q, plus)?;
        for &j in &report.selected {
            counts[j] += 1;
        }
        reports.push(report);
    }
    let selected: Vec<usize> = (0..p).filter(|&j| counts[j] == exps.len()).collect();
    Ok(MethodResult {
        method: Method::Intersection,
        selected,
        report: MethodReport::PerStudy(reports),
    })
}
