//! Implementations of the four subcommands.

use std::io::Write;

use anyhow::{bail, Context, Result};
use simknock::{
    kl_report, run_grid, run_intersection, run_pooling, run_simultaneous, sis_screen, CombinerSpec,
    ConstructionSpec, Experiment, Family, KlStudy, KnockoffCopy, MethodReport, SelectionReport,
};

use crate::config::{parse_config, resolved};
use crate::io::{fmt, fmt_list, read_dataset, read_design, read_gaussian_model, write_row, writer};
use crate::{DiagnoseArgs, KnockoffsArgs, SelectArgs, SelectMethod, SimulateArgs};

/// Broadcasts a per-study argument list: absent uses the default, a
/// single value applies to every study, otherwise one value per study.
fn broadcast<T: Clone>(given: &[T], k: usize, what: &str, default: Vec<T>) -> Result<Vec<T>> {
    match given.len() {
        0 => Ok(default),
        1 => Ok(vec![given[0].clone(); k]),
        m if m == k => Ok(given.to_vec()),
        m => bail!("--{what} given {m} times; expected 1 or {k} (one per study)"),
    }
}

fn parse_construction(name: &str) -> Result<ConstructionSpec> {
    match name {
        "fixed-x" => Ok(ConstructionSpec::FixedX),
        "second-order" => Ok(ConstructionSpec::SecondOrder),
        other => bail!("unknown construction '{other}' (select supports fixed-x and second-order)"),
    }
}

fn default_construction(family: Family) -> ConstructionSpec {
    match family {
        Family::Gaussian => ConstructionSpec::FixedX,
        Family::Binomial => ConstructionSpec::SecondOrder,
    }
}

fn selection_comment(out: &mut dyn Write, label: &str, report: &SelectionReport) -> Result<()> {
    writeln!(
        out,
        "# {label}threshold={} fdp_estimate={} selected={}",
        fmt(report.threshold),
        fmt(report.fdp_estimate),
        report.selected.len()
    )?;
    Ok(())
}

pub fn select(args: &SelectArgs) -> Result<()> {
    let k = args.study.len();
    let parsed_families = args
        .family
        .iter()
        .map(|f| f.parse::<Family>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let families = broadcast(&parsed_families, k, "family", vec![Family::Gaussian; k])?;
    let combiner: CombinerSpec = args
        .combiner
        .parse()
        .map_err(|e: simknock::Error| anyhow::anyhow!(e))?;
    let mut exps: Vec<Experiment> = args
        .study
        .iter()
        .zip(&families)
        .map(|(path, &family)| read_dataset(path, family))
        .collect::<Result<Vec<_>>>()?;

    let total_names: Vec<String> = exps[0].x.column_names().to_vec();
    let features_total = total_names.len();
    let mut kept: Vec<usize> = (0..features_total).collect();
    if let Some(d) = args.screen {
        let screened = sis_screen(&exps, d)?;
        kept = screened.kept;
        exps = screened.experiments;
    }

    let constructions = {
        let parsed = args
            .construction
            .iter()
            .map(|c| parse_construction(c))
            .collect::<Result<Vec<_>>>()?;
        let defaults = families.iter().map(|&f| default_construction(f)).collect();
        broadcast(&parsed, k, "construction", defaults)?
    };

    let result = match args.method {
        SelectMethod::Simultaneous => run_simultaneous(
            &exps,
            &constructions,
            combiner,
            args.q,
            args.plus,
            args.seed,
        )?,
        SelectMethod::Pooling => {
            run_pooling(&exps, args.q, args.plus, args.force_continuous, args.seed)?
        }
        SelectMethod::Intersection => {
            run_intersection(&exps, &constructions, args.q, args.plus, args.seed)?
        }
    };

    let mut out = writer(args.output.as_ref())?;
    writeln!(
        out,
        "# command=select method={} combiner={} q={} plus={} seed={}",
        result.method.as_str(),
        combiner.as_str(),
        fmt(args.q),
        args.plus,
        args.seed
    )?;
    writeln!(
        out,
        "# studies={k} families={} constructions={}",
        families
            .iter()
            .map(|f| f.as_str())
            .collect::<Vec<_>>()
            .join(","),
        if matches!(args.method, SelectMethod::Pooling) {
            "pooled".to_string()
        } else {
            constructions
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join(",")
        }
    )?;
    writeln!(
        out,
        "# screen={} features_total={features_total} features_analyzed={}",
        args.screen.map_or("none".to_string(), |d| d.to_string()),
        kept.len()
    )?;
    match &result.report {
        MethodReport::Combined(report) => {
            selection_comment(&mut *out, "", report)?;
            write_row(&mut *out, &["index".into(), "name".into(), "w".into()])?;
            for &r in &result.selected {
                write_row(
                    &mut *out,
                    &[
                        (kept[r] + 1).to_string(),
                        total_names[kept[r]].clone(),
                        fmt(report.stats.w[r]),
                    ],
                )?;
            }
        }
        MethodReport::PerStudy(reports) => {
            for (i, report) in reports.iter().enumerate() {
                selection_comment(&mut *out, &format!("study_{} ", i + 1), report)?;
            }
            let mut header = vec!["index".to_string(), "name".to_string()];
            header.extend((1..=k).map(|i| format!("w_study_{i}")));
            write_row(&mut *out, &header)?;
            for &r in &result.selected {
                let mut row = vec![(kept[r] + 1).to_string(), total_names[kept[r]].clone()];
                row.extend(reports.iter().map(|rep| fmt(rep.stats.w[r])));
                write_row(&mut *out, &row)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn knockoffs(args: &KnockoffsArgs) -> Result<()> {
    let design = read_design(&args.input)?;
    let copy: KnockoffCopy = match args.construction.as_str() {
        "fixed-x" => {
            if args.model.is_some() {
                bail!("--model is only used with the model-x-gaussian construction");
            }
            simknock::construct_fixed_x(&design, args.seed)?
        }
        "second-order" => {
            if args.model.is_some() {
                bail!("--model is only used with the model-x-gaussian construction");
            }
            simknock::construct_second_order(&design, args.seed)?
        }
        "model-x-gaussian" => {
            let model_path = args
                .model
                .as_ref()
                .context("model-x-gaussian requires --model with the mean and covariance")?;
            let model = read_gaussian_model(model_path, design.column_names())?;
            simknock::construct_model_x_gaussian(&design, &model, args.seed)?
        }
        other => bail!(
            "unknown construction '{other}' (expected fixed-x, second-order or model-x-gaussian)"
        ),
    };
    let mut out = writer(args.output.as_ref())?;
    writeln!(
        out,
        "# command=knockoffs construction={} seed={}",
        copy.method.as_str(),
        args.seed
    )?;
    writeln!(out, "# s={}", fmt_list(copy.s.iter().copied()))?;
    write_row(&mut *out, design.column_names())?;
    for row in copy.xtilde.rows() {
        write_row(&mut *out, &row.iter().map(|&v| fmt(v)).collect::<Vec<_>>())?;
    }
    out.flush()?;
    Ok(())
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    let k = args.x.len();
    if args.xtilde.len() != k || args.p_model.len() != k || args.q_model.len() != k {
        bail!(
            "--x, --xtilde, --p-model and --q-model must each be given once per study \
             (got {k}, {}, {}, {})",
            args.xtilde.len(),
            args.p_model.len(),
            args.q_model.len()
        );
    }
    let mut studies = Vec::with_capacity(k);
    let mut names: Option<Vec<String>> = None;
    for i in 0..k {
        let x = read_design(&args.x[i])?;
        let xt = read_design(&args.xtilde[i])?;
        if xt.column_names() != x.column_names() {
            bail!(
                "{}: knockoff columns do not match design columns of {}",
                args.xtilde[i].display(),
                args.x[i].display()
            );
        }
        if xt.n() != x.n() {
            bail!(
                "{}: {} rows but design {} has {}",
                args.xtilde[i].display(),
                xt.n(),
                args.x[i].display(),
                x.n()
            );
        }
        match &names {
            None => names = Some(x.column_names().to_vec()),
            Some(prev) if prev.as_slice() != x.column_names() => bail!(
                "{}: columns differ from the first study's; all studies must share features",
                args.x[i].display()
            ),
            _ => {}
        }
        let p_model = read_gaussian_model(&args.p_model[i], x.column_names())?;
        let q_model = read_gaussian_model(&args.q_model[i], x.column_names())?;
        studies.push(KlStudy {
            x: x.values().clone(),
            xtilde: xt.values().clone(),
            p_model,
            q_model,
        });
    }
    let report = kl_report(&studies)?;
    let names = names.expect("at least one study");
    let mut out = writer(args.output.as_ref())?;
    writeln!(out, "# command=diagnose studies={k}")?;
    let mut header = vec!["index".to_string(), "name".to_string()];
    header.extend((1..=k).map(|i| format!("kl_study_{i}")));
    header.push("min".to_string());
    write_row(&mut *out, &header)?;
    for (j, name) in names.iter().enumerate() {
        let mut row = vec![(j + 1).to_string(), name.clone()];
        row.extend((0..k).map(|i| fmt(report.kl[[i, j]])));
        row.push(fmt(report.min_over_studies[j]));
        write_row(&mut *out, &row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read {}", args.config.display()))?;
    let jobs =
        parse_config(&text).with_context(|| format!("invalid config {}", args.config.display()))?;
    let mut out = writer(args.output.as_ref())?;
    writeln!(out, "# command=simulate config={}", args.config.display())?;
    for (i, job) in jobs.iter().enumerate() {
        writeln!(out, "# config_{} {}", i + 1, resolved(job))?;
    }
    write_row(
        &mut *out,
        &[
            "config".into(),
            "method".into(),
            "fdr".into(),
            "fdr_se".into(),
            "power".into(),
            "power_se".into(),
            "replicates".into(),
            "failures".into(),
        ],
    )?;
    for (i, job) in jobs.iter().enumerate() {
        let results = run_grid(&job.cfg, &job.methods, job.combiner)?;
        for r in &results {
            write_row(
                &mut *out,
                &[
                    (i + 1).to_string(),
                    r.method.as_str().to_string(),
                    fmt(r.fdr),
                    fmt(r.fdr_se),
                    fmt(r.power),
                    fmt(r.power_se),
                    r.replicates_done.to_string(),
                    r.failures.to_string(),
                ],
            )?;
        }
        out.flush()?;
    }
    Ok(())
}
