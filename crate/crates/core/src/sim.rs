//! Monte-Carlo harness: synthetic multi-study data with a known truth
//! table, and replicated runs summarizing realized FDR and power.
//!
//! Features are autocorrelated Gaussians; coefficients live in blocks:
//! a mutual block shared by every study, per-study solo blocks, and (for
//! three studies) pairwise blocks. Signal magnitudes are uniform draws
//! scaled by a shared sign vector, so mutual signals point the same way
//! in every study.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::collections::HashSet;

use crate::combine::CombinerSpec;
use crate::design::{DesignMatrix, Experiment, Family};
use crate::error::{Error, Result};
use crate::methods::{
    run_intersection, run_pooling, run_simultaneous, ConstructionSpec, Method, MethodResult,
};
use crate::seed::{self, domain};

/// Whether mutual-block magnitudes are shared across studies or drawn
/// independently per study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    SharedStrength,
    IndependentStrength,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::SharedStrength => "shared",
            Scenario::IndependentStrength => "independent",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shared" => Ok(Scenario::SharedStrength),
            "independent" => Ok(Scenario::IndependentStrength),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario '{other}' (expected shared or independent)"
            ))),
        }
    }
}

/// Response generation per study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Linear responses with Gaussian noise in every study.
    Continuous,
    /// Logistic responses in every study.
    Binary,
    /// Two studies: continuous first, the second dichotomized at zero.
    Mixed,
}

impl Setting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::Continuous => "continuous",
            Setting::Binary => "binary",
            Setting::Mixed => "mixed",
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" => Ok(Setting::Continuous),
            "binary" => Ok(Setting::Binary),
            "mixed" => Ok(Setting::Mixed),
            other => Err(Error::InvalidConfig(format!(
                "unknown setting '{other}' (expected continuous, binary or mixed)"
            ))),
        }
    }
}

/// Full description of one simulated configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Number of studies.
    pub k: usize,
    /// Per-study sample sizes.
    pub n: Vec<usize>,
    /// Number of features (shared across studies).
    pub p: usize,
    /// Mutual signal block size.
    pub s0: usize,
    /// Per-study solo block sizes.
    pub s_solo: Vec<usize>,
    /// Pairwise block sizes for three studies, order (1,2), (1,3), (2,3);
    /// empty otherwise.
    pub s_pair: Vec<usize>,
    /// Per-study autocorrelation of the feature process.
    pub rho: Vec<f64>,
    /// Per-study noise standard deviations (continuous / latent responses).
    pub sigma: Vec<f64>,
    /// Per-study intercepts for logistic responses.
    pub alpha: Vec<f64>,
    /// Upper end of the uniform signal magnitude distribution.
    pub amplitude: f64,
    pub scenario: Scenario,
    pub setting: Setting,
    /// Target FDR level for the analysis runs.
    pub q: f64,
    /// Use the +1 threshold variant.
    pub plus: bool,
    pub replicates: usize,
    pub seed: u64,
    /// Draw the truth once and reuse it in every replicate instead of
    /// redrawing per replicate.
    pub fixed_truth: bool,
}

/// True coefficients per study plus the set the filters are after.
#[derive(Debug, Clone)]
pub struct TruthTable {
    /// Per-study coefficient vectors, each of length p.
    pub beta: Vec<Array1<f64>>,
    /// Features with nonzero coefficients in every study (ascending).
    pub mutual: Vec<usize>,
}

/// Monte-Carlo summary for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MCResult {
    pub method: Method,
    /// Mean realized false discovery proportion against the mutual set.
    pub fdr: f64,
    pub fdr_se: f64,
    pub power: f64,
    pub power_se: f64,
    /// Replicates contributing to the means.
    pub replicates_done: usize,
    pub failures: usize,
}

/// Covariance with entries rho^|i-j|.
pub fn ar1_covariance(p: usize, rho: f64) -> Result<Array2<f64>> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::InvalidRho { rho });
    }
    Ok(Array2::from_shape_fn((p, p), |(i, j)| {
        rho.powi((i as i32 - j as i32).abs())
    }))
}

fn validate(cfg: &SimConfig) -> Result<()> {
    if cfg.k == 0 {
        return Err(Error::InvalidConfig("need at least one study".into()));
    }
    for (name, len) in [
        ("n", cfg.n.len()),
        ("s_solo", cfg.s_solo.len()),
        ("rho", cfg.rho.len()),
    ] {
        if len != cfg.k {
            return Err(Error::InvalidConfig(format!(
                "{name} must list one value per study ({}), got {len}",
                cfg.k
            )));
        }
    }
    if cfg.p == 0 {
        return Err(Error::InvalidConfig("p must be positive".into()));
    }
    for &rho in &cfg.rho {
        if !rho.is_finite() || rho.abs() >= 1.0 {
            return Err(Error::InvalidRho { rho });
        }
    }
    let pair_expected = if cfg.k == 3 { 3 } else { 0 };
    if cfg.s_pair.len() != pair_expected && !cfg.s_pair.iter().all(|&s| s == 0) {
        return Err(Error::InvalidConfig(format!(
            "s_pair must have {pair_expected} entries for k = {}",
            cfg.k
        )));
    }
    let required = cfg.s0 + cfg.s_solo.iter().sum::<usize>() + cfg.s_pair.iter().sum::<usize>();
    if required > cfg.p {
        return Err(Error::BlockOverflow { p: cfg.p, required });
    }
    if cfg.amplitude < 0.0 || !cfg.amplitude.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "amplitude must be finite and nonnegative, got {}",
            cfg.amplitude
        )));
    }
    if !(cfg.q > 0.0 && cfg.q < 1.0) {
        return Err(Error::InvalidQ { q: cfg.q });
    }
    if cfg.replicates == 0 {
        return Err(Error::InvalidConfig("replicates must be positive".into()));
    }
    match cfg.setting {
        Setting::Continuous => {
            if cfg.sigma.len() != cfg.k {
                return Err(Error::InvalidConfig(
                    "sigma must list one noise SD per study".into(),
                ));
            }
        }
        Setting::Binary => {
            if cfg.alpha.len() != cfg.k {
                return Err(Error::InvalidConfig(
                    "alpha must list one intercept per study".into(),
                ));
            }
        }
        Setting::Mixed => {
            if cfg.k != 2 {
                return Err(Error::InvalidConfig(
                    "the mixed setting is defined for exactly two studies".into(),
                ));
            }
            if cfg.sigma.len() != 2 {
                return Err(Error::InvalidConfig(
                    "sigma must list two noise SDs (observed and latent)".into(),
                ));
            }
        }
    }
    for &s in &cfg.sigma {
        if s < 0.0 || !s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise SDs must be finite and nonnegative, got {s}"
            )));
        }
    }
    Ok(())
}

fn uniform_block(rng: &mut ChaCha8Rng, len: usize, amplitude: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen::<f64>() * amplitude).collect()
}

/// Draws the block-structured coefficients. Layout along the feature
/// axis: [mutual | solo 1 | .. | solo K | pair blocks | zeros]. A shared
/// sign vector multiplies every study, so mutual effects agree in sign.
pub fn gen_coefficients(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<TruthTable> {
    validate(cfg)?;
    let p = cfg.p;
    let k = cfg.k;
    let signs: Vec<f64> = (0..p)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let eta0: Vec<Vec<f64>> = match cfg.scenario {
        Scenario::SharedStrength => {
            let shared = uniform_block(rng, cfg.s0, cfg.amplitude);
            vec![shared; k]
        }
        Scenario::IndependentStrength => (0..k)
            .map(|_| uniform_block(rng, cfg.s0, cfg.amplitude))
            .collect(),
    };
    let solo: Vec<Vec<f64>> = (0..k)
        .map(|s| uniform_block(rng, cfg.s_solo[s], cfg.amplitude))
        .collect();
    let pair_members: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let pairs: Vec<Vec<f64>> = (0..cfg.s_pair.len())
        .map(|i| uniform_block(rng, cfg.s_pair[i], cfg.amplitude))
        .collect();

    let mut beta: Vec<Array1<f64>> = (0..k).map(|_| Array1::zeros(p)).collect();
    for study in 0..k {
        for (i, &v) in eta0[study].iter().enumerate() {
            beta[study][i] = v * signs[i];
        }
    }
    let mut offset = cfg.s0;
    for study in 0..k {
        for (i, &v) in solo[study].iter().enumerate() {
            beta[study][offset + i] = v * signs[offset + i];
        }
        offset += cfg.s_solo[study];
    }
    for (pair_idx, values) in pairs.iter().enumerate() {
        let (a, b) = pair_members[pair_idx];
        for (i, &v) in values.iter().enumerate() {
            let j = offset + i;
            beta[a][j] = v * signs[j];
            beta[b][j] = v * signs[j];
        }
        offset += values.len();
    }
    let mutual: Vec<usize> = (0..p)
        .filter(|&j| beta.iter().all(|b| b[j] != 0.0))
        .collect();
    Ok(TruthTable { beta, mutual })
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// One row of the feature process: a stationary AR(1) path with unit
/// marginal variance, so cov(x_i, x_j) = rho^|i-j|.
fn ar1_row(rng: &mut ChaCha8Rng, p: usize, rho: f64) -> Vec<f64> {
    let innovation = (1.0 - rho * rho).sqrt();
    let mut row = Vec::with_capacity(p);
    let mut prev: f64 = rng.sample(StandardNormal);
    row.push(prev);
    for _ in 1..p {
        let z: f64 = rng.sample(StandardNormal);
        prev = rho * prev + innovation * z;
        row.push(prev);
    }
    row
}

/// Draws the study datasets for a fixed truth table.
pub fn gen_experiments(
    cfg: &SimConfig,
    truth: &TruthTable,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Experiment>> {
    validate(cfg)?;
    let mut out = Vec::with_capacity(cfg.k);
    for study in 0..cfg.k {
        let n = cfg.n[study];
        let p = cfg.p;
        let mut x = Array2::zeros((n, p));
        for i in 0..n {
            let row = ar1_row(rng, p, cfg.rho[study]);
            for j in 0..p {
                x[[i, j]] = row[j];
            }
        }
        let linear = x.dot(&truth.beta[study]);
        let (y, family) = match cfg.setting {
            Setting::Continuous => {
                let sigma = cfg.sigma[study];
                let y = Array1::from_shape_fn(n, |i| {
                    linear[i] + sigma * rng.sample::<f64, _>(StandardNormal)
                });
                (y, Family::Gaussian)
            }
            Setting::Binary => {
                let alpha = cfg.alpha[study];
                let y = Array1::from_shape_fn(n, |i| {
                    let prob = sigmoid(alpha + linear[i]);
                    if rng.gen::<f64>() < prob {
                        1.0
                    } else {
                        0.0
                    }
                });
                (y, Family::Binomial)
            }
            Setting::Mixed => {
                let sigma = cfg.sigma[study];
                let latent = Array1::from_shape_fn(n, |i| {
                    linear[i] + sigma * rng.sample::<f64, _>(StandardNormal)
                });
                if study == 0 {
                    (latent, Family::Gaussian)
                } else {
                    let y = latent.mapv(|v| if v >= 0.0 { 1.0 } else { 0.0 });
                    (y, Family::Binomial)
                }
            }
        };
        out.push(Experiment::new(y, DesignMatrix::from_array(x)?, family)?);
    }
    Ok(out)
}

/// The constructions the analysis pipeline uses per setting: the
/// deterministic-Gram construction for continuous studies, the
/// estimated-model sampler for binary ones.
pub fn default_constructions(cfg: &SimConfig) -> Vec<ConstructionSpec> {
    (0..cfg.k)
        .map(|study| match cfg.setting {
            Setting::Continuous => ConstructionSpec::FixedX,
            Setting::Binary => ConstructionSpec::SecondOrder,
            Setting::Mixed => {
                if study == 0 {
                    ConstructionSpec::FixedX
                } else {
                    ConstructionSpec::SecondOrder
                }
            }
        })
        .collect()
}

/// Realized false discovery proportion and power of a selection against
/// the mutual set.
pub fn fdp_and_power(selected: &[usize], mutual: &[usize]) -> (f64, f64) {
    let mutual_set: HashSet<usize> = mutual.iter().copied().collect();
    let false_count = selected.iter().filter(|j| !mutual_set.contains(j)).count();
    let true_count = selected.len() - false_count;
    let fdp = false_count as f64 / selected.len().max(1) as f64;
    let power = true_count as f64 / mutual.len().max(1) as f64;
    (fdp, power)
}

fn run_method(
    method: Method,
    cfg: &SimConfig,
    exps: &[Experiment],
    combiner: CombinerSpec,
    analysis_seed: u64,
) -> Result<MethodResult> {
    let constructions = default_constructions(cfg);
    match method {
        Method::Simultaneous => run_simultaneous(
            exps,
            &constructions,
            combiner,
            cfg.q,
            cfg.plus,
            analysis_seed,
        ),
        Method::Pooling => run_pooling(
            exps,
            cfg.q,
            cfg.plus,
            cfg.setting == Setting::Mixed,
            analysis_seed,
        ),
        Method::Intersection => {
            run_intersection(exps, &constructions, cfg.q, cfg.plus, analysis_seed)
        }
    }
}

/// Runs `cfg.replicates` independent replicates for each method and
/// aggregates realized FDP and power. Replicate seeds derive from
/// (cfg.seed, replicate index), so results are identical across runs and
/// thread counts. A method whose failures exceed 5% of replicates is an
/// error rather than a biased summary.
pub fn run_grid(
    cfg: &SimConfig,
    methods: &[Method],
    combiner: CombinerSpec,
) -> Result<Vec<MCResult>> {
    validate(cfg)?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    // Fail fast when the wiring cannot work at all.
    let needs_fixed = matches!(cfg.setting, Setting::Continuous | Setting::Mixed);
    if needs_fixed {
        let fixed_studies: Vec<usize> = match cfg.setting {
            Setting::Continuous => (0..cfg.k).collect(),
            _ => vec![0],
        };
        for k in fixed_studies {
            if cfg.n[k] < 2 * cfg.p {
                return Err(Error::InsufficientRows {
                    n: cfg.n[k],
                    required: 2 * cfg.p,
                });
            }
        }
    }
    type RepOutcome = Vec<std::result::Result<(f64, f64), String>>;
    let per_replicate: Vec<RepOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed::derive(cfg.seed, domain::REPLICATE, r as u64);
            let truth_root = if cfg.fixed_truth { cfg.seed } else { rep_seed };
            let mut truth_rng = seed::stream(truth_root, domain::TRUTH, 0);
            let mut data_rng = seed::stream(rep_seed, domain::DATA, 0);
            let prepared = gen_coefficients(cfg, &mut truth_rng).and_then(|truth| {
                gen_experiments(cfg, &truth, &mut data_rng).map(|exps| (truth, exps))
            });
            match prepared {
                Err(e) => vec![Err(e.to_string()); methods.len()],
                Ok((truth, exps)) => methods
                    .iter()
                    .enumerate()
                    .map(|(m, &method)| {
                        let analysis_seed = seed::derive(rep_seed, domain::METHOD, m as u64);
                        run_method(method, cfg, &exps, combiner, analysis_seed)
                            .map(|res| fdp_and_power(&res.selected, &truth.mutual))
                            .map_err(|e| e.to_string())
                    })
                    .collect(),
            }
        })
        .collect();

    let mut results = Vec::with_capacity(methods.len());
    for (m, &method) in methods.iter().enumerate() {
        let mut fdp = Vec::new();
        let mut power = Vec::new();
        let mut failures = 0usize;
        let mut first_error: Option<String> = None;
        for rep in &per_replicate {
            match &rep[m] {
                Ok((f, pw)) => {
                    fdp.push(*f);
                    power.push(*pw);
                }
                Err(e) => {
                    failures += 1;
                    first_error.get_or_insert_with(|| e.clone());
                }
            }
        }
        if failures * 20 > cfg.replicates {
            return Err(Error::TooManyFailures {
                failed: failures,
                total: cfg.replicates,
                first: first_error.unwrap_or_default(),
            });
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let se = |v: &[f64]| {
            if v.len() < 2 {
                return 0.0;
            }
            let m = mean(v);
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (var / v.len() as f64).sqrt()
        };
        results.push(MCResult {
            method,
            fdr: mean(&fdp),
            fdr_se: se(&fdp),
            power: mean(&power),
            power_se: se(&power),
            replicates_done: fdp.len(),
            failures,
        });
    }
    Ok(results)
}
