//! Textbook statistics, coded from the formulas with no library help.

/// Standard normal CDF through the Chebyshev-fitted complementary error
/// function (fractional error below 1.2e-7).
pub fn normal_cdf(x: f64) -> f64 {
    let z = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806 + t * (0.27886807 + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
    let erfc = t * poly.exp();
    if x >= 0.0 {
        1.0 - 0.5 * erfc
    } else {
        0.5 * erfc
    }
}

/// Inverse standard normal CDF by Acklam's rational approximation.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02, 1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00];
    const B: [f64; 5] = [-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02, 6.680131188771972e+01, -1.328068155288572e+01];
    const C: [f64; 6] = [-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00, -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00];
    const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
    let low = 0.02425;
    if p < low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// BCa endpoints for the mean as 0-based ranks into the sorted replicates:
/// the `round(B α)`-th smallest value for each adjusted level `α`.
pub fn bca_ranks(values: &[f64], replicates: &[f64], level: f64) -> (usize, usize) {
    let n = values.len() as f64;
    let b = replicates.len() as f64;
    let theta = values.iter().sum::<f64>() / n;
    let below = replicates.iter().filter(|&&r| r < theta).count() as f64;
    let z0 = normal_quantile(below / b);
    let mut loo = Vec::new();
    for i in 0..values.len() {
        let s: f64 = values.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
        loo.push(s / (n - 1.0));
    }
    let loo_mean = loo.iter().sum::<f64>() / n;
    let num: f64 = loo.iter().map(|v| (loo_mean - v).powi(3)).sum();
    let den: f64 = loo.iter().map(|v| (loo_mean - v).powi(2)).sum::<f64>().powf(1.5);
    let a = num / (6.0 * den);
    let rank = |alpha: f64| {
        let z = normal_quantile(alpha);
        let adj = normal_cdf(z0 + (z0 + z) / (1.0 - a * (z0 + z)));
        ((b * adj).round() as usize).clamp(1, replicates.len()) - 1
    };
    let tail = (1.0 - level) / 2.0;
    (rank(tail), rank(1.0 - tail))
}

/// OLS with an intercept via the normal equations `X'X b = X'y`, solved by
/// Gauss-Jordan elimination with partial pivoting. Returns the coefficients
/// (intercept first) and R².
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let n = y.len();
    let m = columns.len() + 1;
    let x = |i: usize, j: usize| if j == 0 { 1.0 } else { columns[j - 1][i] };
    let mut a = vec![vec![0.0; m + 1]; m];
    for r in 0..m {
        for c in 0..m {
            a[r][c] = (0..n).map(|i| x(i, r) * x(i, c)).sum();
        }
        a[r][m] = (0..n).map(|i| x(i, r) * y[i]).sum();
    }
    for col in 0..m {
        let pivot = (col..m).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..m {
            if r != col {
                let f = a[r][col];
                for c in 0..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let beta: Vec<f64> = a.iter().map(|row| row[m]).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let (mut rss, mut tss) = (0.0, 0.0);
    for i in 0..n {
        let fit: f64 = (0..m).map(|j| beta[j] * x(i, j)).sum();
        rss += (y[i] - fit).powi(2);
        tss += (y[i] - ybar).powi(2);
    }
    (beta, 1.0 - rss / tss)
}

/// Values standardized with the sample standard deviation.
pub fn zscore(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    v.iter().map(|x| (x - mean) / var.sqrt()).collect()
}

/// Predictors recounted one definition at a time:
/// `(tokens, types, improbable, monophonic, repetition)`.
///
/// `counts[id]` are corpus counts; the improbable types are the
/// `ceil(observed / 10)` observed types ranked lowest by `(count, id)`.
pub fn predictors(tokens: &[u32], counts: &[u64], monophonic: &[bool]) -> (usize, usize, f64, f64, f64) {
    let n = tokens.len();
    let mut distinct = tokens.to_vec();
    distinct.sort();
    distinct.dedup();
    let observed: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
    let quota = (observed.len() + 9) / 10;
    let is_improbable = |id: usize| {
        let lower = observed.iter().filter(|&&o| (counts[o], o) < (counts[id], id)).count();
        counts[id] > 0 && lower < quota
    };
    let mut improbable = 0;
    let mut mono = 0;
    for &t in tokens {
        if is_improbable(t as usize) {
            improbable += 1;
        }
        if monophonic[t as usize] {
            mono += 1;
        }
    }
    let mut repeats = 0;
    for i in 1..n {
        if tokens[i] == tokens[i - 1] {
            repeats += 1;
        }
    }
    let repetition = if n > 1 { repeats as f64 / (n - 1) as f64 } else { 0.0 };
    (n, distinct.len(), improbable as f64 / n as f64, mono as f64 / n as f64, repetition)
}

/// `-mean(log2 p)`, written out once more.
pub fn cross_entropy(p: &[f64]) -> f64 {
    let mut bits = 0.0;
    for &x in p {
        bits -= x.ln() / std::f64::consts::LN_2;
    }
    bits / p.len() as f64
}
