use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

/// Minimum number of records for a stepwise fit.
pub const MIN_RECORDS: usize = 10;

/// Ordinary least squares with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first, then one slope per column.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Two-sided p-values of the t statistics; 0 for a nonzero coefficient
    /// of an exact fit.
    pub p_values: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
    pub r_squared: f64,
    pub df_resid: usize,
}

/// Fits `y` on the given columns plus an intercept. `None` if the design is
/// rank deficient or has no residual degrees of freedom.
pub fn ols(columns: &[&[f64]], y: &[f64]) -> Option<OlsFit> {
    let n = y.len();
    let m = columns.len() + 1;
    if n <= m || columns.iter().any(|c| c.len() != n) {
        return None;
    }
    let x = DMatrix::from_fn(n, m, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..m).map(|j| x.column(j).norm()).fold(0.0, f64::max);
    if (0..m).any(|j| r[(j, j)].abs() <= 1e-9 * scale) {
        return None;
    }
    let beta = r.solve_upper_triangular(&(qr.q().transpose() * &yv))?;
    let fitted = &x * &beta;
    let resid = &yv - &fitted;
    let rss = resid.norm_squared();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let df = n - m;
    let sigma2 = rss / df as f64;
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(m, m))?;
    let cov_unscaled = &r_inv * r_inv.transpose();
    let t_dist = StudentsT::new(0.0, 1.0, df as f64).ok()?;
    let mut std_errors = Vec::with_capacity(m);
    let mut p_values = Vec::with_capacity(m);
    for j in 0..m {
        let se = (sigma2 * cov_unscaled[(j, j)]).sqrt();
        let p = if se > 0.0 {
            let t = beta[j] / se;
            2.0 * (1.0 - t_dist.cdf(t.abs()))
        } else if beta[j] != 0.0 {
            0.0
        } else {
            1.0
        };
        std_errors.push(se);
        p_values.push(p);
    }
    Some(OlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        p_values,
        fitted: fitted.iter().copied().collect(),
        rss,
        r_squared,
        df_resid: df,
    })
}

/// Rule for adding and dropping predictors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Enter at `p < enter`, leave at `p > remove`.
    PValue { enter: f64, remove: f64 },
    /// Take the move that lowers `n ln(RSS/n) + 2k` the most.
    Aic,
}

impl Default for Criterion {
    fn default() -> Self {
        Criterion::PValue { enter: 0.05, remove: 0.10 }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::PValue { enter, remove } => write!(f, "p-value (enter p < {enter}, remove p > {remove})"),
            Criterion::Aic => f.write_str("AIC"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepwiseConfig {
    pub criterion: Criterion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepAction {
    Entered,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub action: StepAction,
    pub predictor: String,
    /// R² of the model after this step.
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub criterion: Criterion,
    pub n: usize,
    pub steps: Vec<Step>,
    /// Final model: `(predictor, standardized beta, p-value)` in entry order.
    pub betas: Vec<(String, f64, f64)>,
    pub r_squared: f64,
    pub warnings: Vec<String>,
}

fn zscore(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (sd > 0.0 && sd.is_finite()).then(|| v.iter().map(|x| (x - mean) / sd).collect())
}

fn aic(fit: &OlsFit, n: usize) -> f64 {
    n as f64 * (fit.rss / n as f64).ln() + 2.0 * fit.coefficients.len() as f64
}

struct Fitter<'a> {
    columns: &'a [Option<Vec<f64>>],
    y: &'a [f64],
}

impl Fitter<'_> {
    fn fit(&self, model: &[usize]) -> Option<OlsFit> {
        let cols: Vec<&[f64]> = model.iter().map(|&j| self.columns[j].as_deref().expect("usable column")).collect();
        ols(&cols, self.y)
    }
}

/// Forward stepwise selection with removal checks, on z-scored predictors
/// and outcome. Stops early once the fit is exact.
pub fn stepwise_regression(names: &[&str], predictors: &[Vec<f64>], outcome: &[f64], config: StepwiseConfig) -> Result<RegressionResult, EvalError> {
    let n = outcome.len();
    if n < MIN_RECORDS {
        return Err(EvalError::TooFewValues { needed: MIN_RECORDS, got: n });
    }
    for (name, col) in names.iter().zip(predictors) {
        if col.len() != n {
            return Err(EvalError::DimensionMismatch { name: name.to_string(), expected: n, got: col.len() });
        }
    }
    if names.len() != predictors.len() {
        return Err(EvalError::DimensionMismatch { name: "names".into(), expected: predictors.len(), got: names.len() });
    }
    let mut result = RegressionResult { criterion: config.criterion, n, steps: Vec::new(), betas: Vec::new(), r_squared: 0.0, warnings: Vec::new() };
    let Some(y) = zscore(outcome) else {
        result.warnings.push("outcome is constant; nothing to explain".into());
        return Ok(result);
    };
    let columns: Vec<Option<Vec<f64>>> = predictors.iter().map(|c| zscore(c)).collect();
    for (name, c) in names.iter().zip(&columns) {
        if c.is_none() {
            result.warnings.push(format!("{name} is constant; skipped"));
        }
    }
    let fitter = Fitter { columns: &columns, y: &y };
    let mut model: Vec<usize> = Vec::new();
    let mut warned_collinear: HashSet<usize> = HashSet::new();
    let mut visited: HashSet<Vec<usize>> = HashSet::from([Vec::new()]);
    let mut current_r2 = 0.0;
    let mut current_aic = aic_empty(&y);

    loop {
        if current_r2 >= 1.0 - 1e-12 {
            break;
        }
        // forward
        let mut best: Option<(f64, usize, OlsFit)> = None;
        for j in 0..columns.len() {
            if columns[j].is_none() || model.contains(&j) {
                continue;
            }
            let mut trial = model.clone();
            trial.push(j);
            let Some(fit) = fitter.fit(&trial) else {
                if warned_collinear.insert(j) {
                    result.warnings.push(format!("{} is collinear with the selected predictors; skipped", names[j]));
                }
                continue;
            };
            let score = match config.criterion {
                Criterion::PValue { .. } => *fit.p_values.last().expect("slope"),
                Criterion::Aic => aic(&fit, n),
            };
            if (score.is_finite() || score == f64::NEG_INFINITY)
                && best.as_ref().is_none_or(|b| score < b.0) {
                    best = Some((score, j, fit));
                }
        }
        let accept = match (&best, config.criterion) {
            (Some((p, _, _)), Criterion::PValue { enter, .. }) => *p < enter,
            (Some((a, _, _)), Criterion::Aic) => *a < current_aic,
            (None, _) => false,
        };
        if !accept {
            break;
        }
        let (score, j, fit) = best.expect("accepted");
        model.push(j);
        current_r2 = fit.r_squared;
        if config.criterion == Criterion::Aic {
            current_aic = score;
        }
        result.steps.push(Step { action: StepAction::Entered, predictor: names[j].to_string(), r_squared: fit.r_squared });
        if !visited.insert(sorted(&model)) {
            result.warnings.push("selection revisited an earlier model; stopped".into());
            break;
        }

        // backward
        let fit = fitter.fit(&model).expect("just fitted");
        let drop = match config.criterion {
            Criterion::PValue { remove, .. } => fit.p_values[1..]
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p > remove)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| (i, None)),
            Criterion::Aic => (0..model.len())
                .filter_map(|i| {
                    let rest: Vec<usize> = model.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &c)| c).collect();
                    let a = if rest.is_empty() { aic_empty(&y) } else { aic(&fitter.fit(&rest)?, n) };
                    (a < current_aic).then_some((i, Some(a)))
                })
                .min_by(|a, b| a.1.unwrap().total_cmp(&b.1.unwrap())),
        };
        if let Some((i, new_aic)) = drop {
            let gone = model.remove(i);
            current_r2 = if model.is_empty() { 0.0 } else { fitter.fit(&model).expect("subset of a full-rank model").r_squared };
            if let Some(a) = new_aic {
                current_aic = a;
            }
            result.steps.push(Step { action: StepAction::Removed, predictor: names[gone].to_string(), r_squared: current_r2 });
            if !visited.insert(sorted(&model)) {
                result.warnings.push("selection revisited an earlier model; stopped".into());
                break;
            }
        }
    }

    if !model.is_empty() {
        let fit = fitter.fit(&model).expect("selected model is full rank");
        result.betas = model.iter().enumerate().map(|(i, &j)| (names[j].to_string(), fit.coefficients[i + 1], fit.p_values[i + 1])).collect();
        result.r_squared = fit.r_squared;
    }
    Ok(result)
}

fn aic_empty(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    n * (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).ln() + 2.0
}

fn sorted(model: &[usize]) -> Vec<usize> {
    let mut m = model.to_vec();
    m.sort_unstable();
    m
}
