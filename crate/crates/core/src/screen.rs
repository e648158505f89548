//! Marginal screening to cut very wide designs down before the filter.
//!
//! Each feature gets one marginal association p-value per study; features
//! are ranked by their worst (largest) p-value across studies, so a
//! feature must look at least marginally promising in every study to
//! survive. The kept columns are returned along with the index map back
//! into the original design.

use ndarray::{Array1, Array2};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::design::{check_shared_columns, Experiment, Family};
use crate::error::{Error, Result};

/// Screening outcome: per-study p-values and the reduced studies.
#[derive(Debug, Clone)]
pub struct ScreenResult {
    /// Kept feature indices into the original design, ascending.
    pub kept: Vec<usize>,
    /// K x p marginal p-values on the original feature axis.
    pub pvalues: Array2<f64>,
    /// The input studies restricted to the kept columns.
    pub experiments: Vec<Experiment>,
}

/// Two-sided t-test p-value for the slope of a univariate linear fit.
pub fn marginal_pvalue_gaussian(x: &Array1<f64>, y: &Array1<f64>) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: n,
            actual: y.len(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidConfig(
            "marginal tests need at least 3 observations".into(),
        ));
    }
    let nf = n as f64;
    let (mx, my) = (x.sum() / nf, y.sum() / nf);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 1e-12 {
        // Constant feature carries no marginal evidence.
        return Ok(1.0);
    }
    let slope = sxy / sxx;
    let rss = (syy - slope * sxy).max(0.0);
    let df = nf - 2.0;
    let sigma2 = rss / df;
    if sigma2 <= 1e-300 {
        return Ok(0.0);
    }
    let t = slope / (sigma2 / sxx).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    Ok(2.0 * dist.cdf(-t.abs()))
}

/// Two-sided Wald p-value for the slope of a univariate logistic fit,
/// obtained by Newton iteration on (intercept, slope).
pub fn marginal_pvalue_binomial(x: &Array1<f64>, y: &Array1<f64>) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: n,
            actual: y.len(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidConfig(
            "marginal tests need at least 3 observations".into(),
        ));
    }
    let nf = n as f64;
    let ybar = y.sum() / nf;
    if ybar <= 0.0 || ybar >= 1.0 {
        // Constant response: no slope information.
        return Ok(1.0);
    }
    let mx = x.sum() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 1e-12 {
        return Ok(1.0);
    }
    let mut a = (ybar / (1.0 - ybar)).ln();
    let mut b = 0.0_f64;
    let mut h = [[0.0_f64; 2]; 2];
    for _ in 0..50 {
        let mut g = [0.0_f64; 2];
        h = [[0.0; 2]; 2];
        for i in 0..n {
            let eta = a + b * x[i];
            let p = 1.0 / (1.0 + (-eta).exp());
            let w = (p * (1.0 - p)).max(1e-10);
            let r = y[i] - p;
            g[0] += r;
            g[1] += r * x[i];
            h[0][0] += w;
            h[0][1] += w * x[i];
            h[1][1] += w * x[i] * x[i];
        }
        h[1][0] = h[0][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        if det.abs() <= 1e-12 {
            return Ok(1.0);
        }
        let da = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let db = (h[0][0] * g[1] - h[0][1] * g[0]) / det;
        a += da;
        b += db;
        if da.abs().max(db.abs()) < 1e-12 {
            break;
        }
    }
    let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
    if det.abs() <= 1e-12 {
        return Ok(1.0);
    }
    let var_b = h[0][0] / det;
    if var_b <= 0.0 {
        return Ok(1.0);
    }
    let z = b / var_b.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    Ok(2.0 * normal.cdf(-z.abs()))
}

/// Keeps the d features whose worst-case (max over studies) marginal
/// p-value is smallest; ties break toward the smaller feature index.
pub fn sis_screen(exps: &[Experiment], d: usize) -> Result<ScreenResult> {
    let p = check_shared_columns(exps)?;
    if d == 0 || d > p {
        return Err(Error::InvalidD { d, p });
    }
    let k = exps.len();
    let mut pvalues = Array2::zeros((k, p));
    for (ki, e) in exps.iter().enumerate() {
        for j in 0..p {
            let col = e.x.values().column(j).to_owned();
            pvalues[[ki, j]] = match e.family {
                Family::Gaussian => marginal_pvalue_gaussian(&col, &e.y)?,
                Family::Binomial => marginal_pvalue_binomial(&col, &e.y)?,
            };
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    let score = |j: usize| {
        (0..k)
            .map(|ki| pvalues[[ki, j]])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    order.sort_by(|&i, &j| score(i).total_cmp(&score(j)).then(i.cmp(&j)));
    let mut kept: Vec<usize> = order.into_iter().take(d).collect();
    kept.sort_unstable();
    let experiments = exps
        .iter()
        .map(|e| Experiment::new(e.y.clone(), e.x.select_columns(&kept)?, e.family))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScreenResult {
        kept,
        pvalues,
        experiments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignMatrix;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    // Frozen oracle: scipy.stats.linregress on this exact data.
    #[test]
    fn gaussian_pvalue_matches_external_oracle() {
        let x = array![
            -0.8019314252534474,
            -1.324358995628145,
            -0.24836162209524854,
            0.4204452380655215,
            1.1360465324896427,
            0.10970639932180819,
            -0.5526473205362324,
            -0.7847803553442784,
            0.7487457707345911,
            1.6347830429585775,
            0.27276877584472176,
            -1.2333286640307717,
            -0.9582652054360887,
            1.6000190889991115,
            0.2028824405086084,
            -1.7321348424395848,
            -0.08369619281702581,
            -1.1632259734447485,
            -0.6292880940615545,
            -0.48800582327685743,
            -0.7133133716322436,
            0.5533784703532895,
            -0.06308597192528916,
            -0.5894312580326048,
            0.40963782655711695
        ];
        let y = array![
            0.48831016685856593,
            -2.402510567908193,
            -0.15541942404169287,
            -0.3443911655915953,
            1.0356820011296821,
            -0.9016536272964122,
            -0.1214274623913948,
            -0.36571002531949093,
            0.5946588656291838,
            0.5598999292466158,
            0.1220246902026847,
            -1.7779918329203264,
            -1.8218209105536105,
            1.8048010036591826,
            -0.6470439854844794,
            0.0845882272266254,
            0.9496307016202155,
            -2.62839747120552,
            0.0686983941632443,
            -1.1921212862025308,
            -0.23759347714752568,
            0.7863347688520532,
            -1.7388985657713523,
            -0.40496753019185383,
            0.3719202298463025
        ];
        let p = marginal_pvalue_gaussian(&x, &y).unwrap();
        assert_abs_diff_eq!(p, 0.0004629946244856873, epsilon = 1e-10);
    }

    // Frozen oracle: statsmodels Logit (Newton) Wald p-value on this data.
    #[test]
    fn binomial_pvalue_matches_external_oracle() {
        let x = array![
            -0.8028369359828766,
            0.2428499070790021,
            -1.656345427042233,
            0.656104877556666,
            1.1434530226920894,
            -0.45261100300789897,
            0.4304857455543092,
            0.25093256908418204,
            -0.3943520554588936,
            -0.8624048655156082,
            -2.032552427456725,
            1.4104234840116703,
            -0.04763223719233393,
            2.5223274107494347,
            0.8262182491746161,
            0.27778052697538275,
            -0.6574310585061062,
            1.3924692044318112,
            -0.5062891144787869,
            1.569949132247599,
            -0.39836128088991196,
            0.18595392958113843,
            -1.5226704029731744,
            2.343232381708724,
            -0.09402582933360398,
            -0.3851135890587634,
            0.8108476339474449,
            -0.8913718361585312,
            0.767607275753405,
            -1.1712404048300675,
            0.5452417714953117,
            -1.0441262392158024,
            -1.837068108918472,
            -0.5937675843336032,
            -1.4639144154991144,
            0.5532782302206338,
            0.02167111699934259,
            0.5094464961689524,
            0.09130282542822574,
            -0.3538590292305842
        ];
        let y = array![
            0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0,
            1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0, 0.0, 0.0
        ];
        let p = marginal_pvalue_binomial(&x, &y).unwrap();
        assert_abs_diff_eq!(p, 0.007365449400808241, epsilon = 1e-7);
    }

    #[test]
    fn constant_feature_gets_pvalue_one() {
        let x = Array1::from_elem(10, 2.5);
        let y = Array1::from_shape_fn(10, |i| i as f64);
        assert_abs_diff_eq!(marginal_pvalue_gaussian(&x, &y).unwrap(), 1.0);
        let yb = Array1::from_shape_fn(10, |i| (i % 2) as f64);
        assert_abs_diff_eq!(marginal_pvalue_binomial(&x, &yb).unwrap(), 1.0);
    }

    fn screening_studies() -> Vec<Experiment> {
        // Feature 0 associates in both studies, feature 1 only in study 1,
        // feature 2 in neither.
        let mut rng = crate::seed::stream(11, 0, 0);
        use rand::Rng;
        use rand_distr::StandardNormal;
        (0..2)
            .map(|study| {
                let x = Array2::from_shape_fn((60, 3), |_| rng.sample::<f64, _>(StandardNormal));
                let y = Array1::from_shape_fn(60, |i| {
                    let solo = if study == 0 { 2.0 * x[[i, 1]] } else { 0.0 };
                    2.0 * x[[i, 0]] + solo + 0.3 * rng.sample::<f64, _>(StandardNormal)
                });
                Experiment::new(y, DesignMatrix::from_array(x).unwrap(), Family::Gaussian).unwrap()
            })
            .collect()
    }

    #[test]
    fn screening_prefers_features_strong_in_every_study() {
        let exps = screening_studies();
        let result = sis_screen(&exps, 1).unwrap();
        assert_eq!(result.kept, vec![0]);
        assert_eq!(result.pvalues.dim(), (2, 3));
        // The solo feature ranks behind the mutual one because its
        // worst-case p-value comes from the unassociated study.
        let worst = |j: usize| result.pvalues[[0, j]].max(result.pvalues[[1, j]]);
        assert!(worst(0) < worst(1));
        for e in &result.experiments {
            assert_eq!(e.x.p(), 1);
            assert_eq!(e.x.column_names(), &["x1".to_string()]);
        }
    }

    #[test]
    fn screening_validates_d() {
        let exps = screening_studies();
        assert!(matches!(sis_screen(&exps, 0), Err(Error::InvalidD { .. })));
        assert!(matches!(sis_screen(&exps, 4), Err(Error::InvalidD { .. })));
    }
}
