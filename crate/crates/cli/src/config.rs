//! Parser for simulation config files.
//!
//! The format is one `key = value` pair per line, with `#` comments and
//! blank lines ignored. Per-study values are comma separated; a single
//! value is broadcast to all studies. A semicolon-separated value lists
//! alternatives, and the file expands to the cartesian product of all
//! alternatives, one simulation configuration per combination.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use simknock::{CombinerSpec, Method, Setting, SimConfig};

/// One expanded grid point: a full configuration plus what to run on it.
#[derive(Debug, Clone)]
pub struct SimJob {
    pub cfg: SimConfig,
    pub methods: Vec<Method>,
    pub combiner: CombinerSpec,
}

const KNOWN_KEYS: &[&str] = &[
    "k",
    "n",
    "p",
    "s0",
    "s_solo",
    "s_pair",
    "rho",
    "sigma",
    "alpha",
    "amplitude",
    "scenario",
    "setting",
    "q",
    "plus",
    "replicates",
    "seed",
    "fixed_truth",
    "methods",
    "combiner",
];

/// Expands the raw text into one job per grid point.
pub fn parse_config(text: &str) -> Result<Vec<SimJob>> {
    let mut grid: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            bail!(
                "line {}: unknown key '{key}' (known: {})",
                lineno + 1,
                KNOWN_KEYS.join(", ")
            );
        }
        if value.is_empty() {
            bail!("line {}: empty value for '{key}'", lineno + 1);
        }
        let alternatives: Vec<&str> = value.split(';').map(str::trim).collect();
        let mut next = Vec::with_capacity(grid.len() * alternatives.len());
        for point in &grid {
            for alt in &alternatives {
                let mut point = point.clone();
                point.insert(key.to_string(), alt.to_string());
                next.push(point);
            }
        }
        grid = next;
    }
    grid.iter().map(build_job).collect()
}

fn get<'a>(point: &'a BTreeMap<String, String>, key: &str) -> Option<&'a str> {
    point.get(key).map(String::as_str)
}

fn require<'a>(point: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    get(point, key).with_context(|| format!("missing required key '{key}'"))
}

fn parse<T: std::str::FromStr>(value: &str, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow::anyhow!("invalid value '{value}' for '{key}': {e}"))
}

/// Comma list broadcast to `want` entries when a single value is given.
fn parse_per_study<T: std::str::FromStr + Clone>(
    value: &str,
    key: &str,
    want: usize,
) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let parts = value
        .split(',')
        .map(|v| parse::<T>(v.trim(), key))
        .collect::<Result<Vec<T>>>()?;
    if parts.len() == want {
        Ok(parts)
    } else if parts.len() == 1 {
        Ok(vec![parts[0].clone(); want])
    } else {
        bail!(
            "'{key}' needs 1 or {want} comma-separated values, found {}",
            parts.len()
        )
    }
}

fn build_job(point: &BTreeMap<String, String>) -> Result<SimJob> {
    let k: usize = parse(get(point, "k").unwrap_or("2"), "k")?;
    let setting: Setting = parse(get(point, "setting").unwrap_or("continuous"), "setting")?;
    let pairs = if k == 3 { 3 } else { 0 };
    let s_pair = match get(point, "s_pair") {
        Some(v) if pairs == 3 => parse_per_study::<usize>(v, "s_pair", 3)?,
        Some(v) => {
            let vals = v
                .split(',')
                .map(|x| parse::<usize>(x.trim(), "s_pair"))
                .collect::<Result<Vec<usize>>>()?;
            if vals.iter().any(|&x| x != 0) {
                bail!("'s_pair' is only available for k = 3");
            }
            Vec::new()
        }
        None if pairs == 3 => vec![0, 0, 0],
        None => Vec::new(),
    };
    let cfg = SimConfig {
        k,
        n: parse_per_study(require(point, "n")?, "n", k)?,
        p: parse(require(point, "p")?, "p")?,
        s0: parse(require(point, "s0")?, "s0")?,
        s_solo: parse_per_study(get(point, "s_solo").unwrap_or("0"), "s_solo", k)?,
        s_pair,
        rho: parse_per_study(get(point, "rho").unwrap_or("0"), "rho", k)?,
        sigma: parse_per_study(get(point, "sigma").unwrap_or("1"), "sigma", k)?,
        alpha: parse_per_study(get(point, "alpha").unwrap_or("0"), "alpha", k)?,
        amplitude: parse(require(point, "amplitude")?, "amplitude")?,
        scenario: parse(get(point, "scenario").unwrap_or("shared"), "scenario")?,
        setting,
        q: parse(get(point, "q").unwrap_or("0.2"), "q")?,
        plus: parse(get(point, "plus").unwrap_or("false"), "plus")?,
        replicates: parse(get(point, "replicates").unwrap_or("100"), "replicates")?,
        seed: parse(get(point, "seed").unwrap_or("42"), "seed")?,
        fixed_truth: parse(get(point, "fixed_truth").unwrap_or("false"), "fixed_truth")?,
    };
    let methods = get(point, "methods")
        .unwrap_or("simultaneous,pooling,intersection")
        .split(',')
        .map(|m| parse::<Method>(m.trim(), "methods"))
        .collect::<Result<Vec<Method>>>()?;
    if methods.is_empty() {
        bail!("'methods' must name at least one method");
    }
    let combiner: CombinerSpec = parse(get(point, "combiner").unwrap_or("oscf-max"), "combiner")?;
    Ok(SimJob {
        cfg,
        methods,
        combiner,
    })
}

fn join<T: ToString>(vs: &[T]) -> String {
    vs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Renders the fully resolved configuration, defaults included, for the
/// comment header of the output file.
pub fn resolved(job: &SimJob) -> String {
    let cfg = &job.cfg;
    let mut parts = vec![
        format!("k={}", cfg.k),
        format!("n={}", join(&cfg.n)),
        format!("p={}", cfg.p),
        format!("s0={}", cfg.s0),
        format!("s_solo={}", join(&cfg.s_solo)),
    ];
    if !cfg.s_pair.is_empty() {
        parts.push(format!("s_pair={}", join(&cfg.s_pair)));
    }
    parts.extend([
        format!("rho={}", join(&cfg.rho)),
        format!("sigma={}", join(&cfg.sigma)),
        format!("alpha={}", join(&cfg.alpha)),
        format!("amplitude={}", cfg.amplitude),
        format!("scenario={}", cfg.scenario.as_str()),
        format!("setting={}", cfg.setting.as_str()),
        format!("q={}", cfg.q),
        format!("plus={}", cfg.plus),
        format!("replicates={}", cfg.replicates),
        format!("seed={}", cfg.seed),
        format!("fixed_truth={}", cfg.fixed_truth),
        format!(
            "methods={}",
            job.methods
                .iter()
                .map(|m| m.as_str())
                .collect::<Vec<_>>()
                .join(",")
        ),
        format!("combiner={}", job.combiner.as_str()),
    ]);
    parts.join(" ")
}
