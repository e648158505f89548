//! CSV input and output.
//!
//! All inputs share one dialect: a header row, numeric data rows, and
//! `#`-prefixed comment lines that are skipped anywhere in the file.
//! Outputs echo their resolved settings as `#` comment lines before the
//! header, so an output file documents how it was produced and can still
//! be fed back into other subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::{Array1, Array2};
use simknock::{DesignMatrix, Experiment, Family, GaussianModel};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn parse_cell(cell: &str, path: &Path, line: u64, column: &str) -> Result<f64> {
    cell.parse::<f64>().with_context(|| {
        format!(
            "{} line {line}: '{cell}' in column '{column}' is not a number",
            path.display()
        )
    })
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = reader(path)?;
    let headers: Vec<String> = rdr
        .headers()
        .with_context(|| format!("cannot read header of {}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        bail!("{}: empty header row", path.display());
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.with_context(|| format!("cannot parse {}", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            bail!(
                "{} line {line}: expected {} fields, found {}",
                path.display(),
                headers.len(),
                record.len()
            );
        }
        let row = record
            .iter()
            .zip(&headers)
            .map(|(cell, name)| parse_cell(cell, path, line, name))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok((headers, rows))
}

fn to_array(rows: Vec<Vec<f64>>, cols: usize) -> Array2<f64> {
    let n = rows.len();
    Array2::from_shape_fn((n, cols), |(i, j)| rows[i][j])
}

/// Reads a study file: first column is the response, the rest the design.
pub fn read_dataset(path: &Path, family: Family) -> Result<Experiment> {
    let (headers, rows) = read_table(path)?;
    if headers.len() < 2 {
        bail!(
            "{}: need a response column plus at least one feature",
            path.display()
        );
    }
    let data = to_array(rows, headers.len());
    let y = data.column(0).to_owned();
    let x = data.slice(ndarray::s![.., 1..]).to_owned();
    let names = headers[1..].to_vec();
    let design = DesignMatrix::new(x, names)
        .with_context(|| format!("invalid design in {}", path.display()))?;
    Experiment::new(y, design, family)
        .with_context(|| format!("invalid study in {}", path.display()))
}

/// Reads a design-only file: every column is a feature.
pub fn read_design(path: &Path) -> Result<DesignMatrix> {
    let (headers, rows) = read_table(path)?;
    let data = to_array(rows, headers.len());
    DesignMatrix::new(data, headers)
        .with_context(|| format!("invalid design in {}", path.display()))
}

/// Reads a Gaussian model file: first data row is the mean vector, the
/// following p rows are the covariance matrix.
pub fn read_gaussian_model(path: &Path, names: &[String]) -> Result<GaussianModel> {
    let (headers, rows) = read_table(path)?;
    let p = names.len();
    if headers != names {
        bail!(
            "{}: model columns {:?} do not match design columns {:?}",
            path.display(),
            headers,
            names
        );
    }
    if rows.len() != p + 1 {
        bail!(
            "{}: expected 1 mean row plus {p} covariance rows, found {}",
            path.display(),
            rows.len()
        );
    }
    let mean = Array1::from_vec(rows[0].clone());
    let covariance = Array2::from_shape_fn((p, p), |(i, j)| rows[i + 1][j]);
    Ok(GaussianModel { mean, covariance })
}

/// Opens the output target; `None` means stdout.
pub fn writer(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Formats a float with the shortest representation that parses back to
/// the same value, so files round-trip exactly.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn fmt_list(vs: impl IntoIterator<Item = f64>) -> String {
    vs.into_iter().map(fmt).collect::<Vec<_>>().join(",")
}

/// Writes one CSV row of already-formatted fields.
pub fn write_row(out: &mut dyn Write, fields: &[String]) -> Result<()> {
    writeln!(out, "{}", fields.join(","))?;
    Ok(())
}
