//! Study data containers and their validity checks.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Response model for one study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Binomial,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Binomial => "binomial",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "binomial" => Ok(Family::Binomial),
            other => Err(Error::InvalidConfig(format!(
                "unknown family '{other}' (expected gaussian or binomial)"
            ))),
        }
    }
}

/// An n x p feature matrix with named columns. All entries are finite and
/// column names are unique.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    values: Array2<f64>,
    column_names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(values: Array2<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, p) = values.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidConfig(format!(
                "design matrix must be non-empty, got {n} x {p}"
            )));
        }
        if column_names.len() != p {
            return Err(Error::DimensionMismatch {
                what: "column names",
                expected: p,
                actual: column_names.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate column name '{name}'"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "design matrix contains non-finite entries".into(),
            ));
        }
        Ok(DesignMatrix {
            values,
            column_names,
        })
    }

    /// Wraps a matrix with generated names x1..xp.
    pub fn from_array(values: Array2<f64>) -> Result<Self> {
        let p = values.ncols();
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        DesignMatrix::new(values, names)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// A copy restricted to the given column indices, keeping names.
    pub fn select_columns(&self, keep: &[usize]) -> Result<Self> {
        for &j in keep {
            if j >= self.p() {
                return Err(Error::DimensionMismatch {
                    what: "column index",
                    expected: self.p(),
                    actual: j,
                });
            }
        }
        let values =
            Array2::from_shape_fn((self.n(), keep.len()), |(i, j)| self.values[[i, keep[j]]]);
        let names = keep.iter().map(|&j| self.column_names[j].clone()).collect();
        DesignMatrix::new(values, names)
    }
}

/// One study: response, features, and response family.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub y: Array1<f64>,
    pub x: DesignMatrix,
    pub family: Family,
}

impl Experiment {
    pub fn new(y: Array1<f64>, x: DesignMatrix, family: Family) -> Result<Self> {
        if y.len() != x.n() {
            return Err(Error::DimensionMismatch {
                what: "response length",
                expected: x.n(),
                actual: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "response contains non-finite entries".into(),
            ));
        }
        if family == Family::Binomial {
            if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "binomial response entries must be 0 or 1, got {bad}"
                )));
            }
        }
        Ok(Experiment { y, x, family })
    }
}

/// Checks that all studies share the same feature columns (count and names,
/// in order). Returns the common p.
pub fn check_shared_columns(exps: &[Experiment]) -> Result<usize> {
    let first = exps
        .first()
        .ok_or_else(|| Error::InvalidConfig("at least one study is required".into()))?;
    let p = first.x.p();
    for (k, e) in exps.iter().enumerate().skip(1) {
        if e.x.p() != p {
            return Err(Error::ColumnMismatch {
                detail: format!(
                    "study 1 has {p} features but study {} has {}",
                    k + 1,
                    e.x.p()
                ),
            });
        }
        for (j, (a, b)) in first
            .x
            .column_names()
            .iter()
            .zip(e.x.column_names())
            .enumerate()
        {
            if a != b {
                return Err(Error::ColumnMismatch {
                    detail: format!(
                        "column {} is '{a}' in study 1 but '{b}' in study {}",
                        j + 1,
                        k + 1
                    ),
                });
            }
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn design() -> DesignMatrix {
        DesignMatrix::from_array(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap()
    }

    #[test]
    fn rejects_duplicate_names() {
        let r = DesignMatrix::new(array![[1.0, 2.0]], vec!["a".into(), "a".into()]);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let r = DesignMatrix::from_array(array![[1.0, f64::NAN]]);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rejects_response_length_mismatch() {
        let r = Experiment::new(array![1.0, 2.0], design(), Family::Gaussian);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_non_binary_binomial_response() {
        let r = Experiment::new(array![0.0, 1.0, 0.5], design(), Family::Binomial);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn shared_columns_checks_names() {
        let a = Experiment::new(array![0.0, 1.0, 0.0], design(), Family::Gaussian).unwrap();
        let mut other = design();
        other.column_names[1] = "z".into();
        let b = Experiment::new(array![0.0, 1.0, 0.0], other, Family::Gaussian).unwrap();
        assert!(matches!(
            check_shared_columns(&[a, b]),
            Err(Error::ColumnMismatch { .. })
        ));
    }

    #[test]
    fn select_columns_keeps_names() {
        let d = design();
        let sub = d.select_columns(&[1]).unwrap();
        assert_eq!(sub.column_names(), &["x2".to_string()]);
        assert_eq!(sub.values()[[2, 0]], 6.0);
    }
}
