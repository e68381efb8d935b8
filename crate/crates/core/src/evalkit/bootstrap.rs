use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: 1000, level: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Means of `replicates` resamples (with replacement) of `values`, in draw order.
pub fn bootstrap_replicates(values: &[f64], replicates: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = values.len();
    (0..replicates)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect()
}

/// Bias-corrected and accelerated interval for the mean of `values`, read
/// off the given replicate means.
///
/// The bias correction is the normal quantile of the share of replicates
/// below the sample mean; the acceleration comes from the skewness of the
/// leave-one-out means. Endpoint `α` is the `ceil(α B)`-th smallest replicate.
pub fn bca_from_replicates(values: &[f64], replicates: &[f64], level: f64) -> Result<Interval, EvalError> {
    if values.len() < 2 {
        return Err(EvalError::TooFewValues { needed: 2, got: values.len() });
    }
    if replicates.is_empty() {
        return Err(EvalError::TooFewValues { needed: 1, got: 0 });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EvalError::BadLevel(level));
    }
    let theta = mean(values);
    if values.iter().all(|&v| v == values[0]) {
        return Ok(Interval { mean: values[0], low: values[0], high: values[0] });
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let b = replicates.len() as f64;

    // keep the share strictly inside (0, 1) so the quantile stays finite
    let below = replicates.iter().filter(|&&r| r < theta).count() as f64;
    let share = (below / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    let z0 = normal.inverse_cdf(share);

    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    let jack: Vec<f64> = values.iter().map(|v| (total - v) / (n - 1.0)).collect();
    let jack_mean = mean(&jack);
    let (mut num, mut den) = (0.0, 0.0);
    for j in &jack {
        let d = jack_mean - j;
        num += d * d * d;
        den += d * d;
    }
    let accel = if den > 0.0 { num / (6.0 * den.powf(1.5)) } else { 0.0 };

    let adjusted = |alpha: f64| {
        let z = normal.inverse_cdf(alpha);
        normal.cdf(z0 + (z0 + z) / (1.0 - accel * (z0 + z)))
    };
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pick = |alpha: f64| {
        let rank = ((alpha * b).ceil() as isize - 1).clamp(0, sorted.len() as isize - 1);
        sorted[rank as usize]
    };
    let tail = (1.0 - level) / 2.0;
    Ok(Interval { mean: theta, low: pick(adjusted(tail)), high: pick(adjusted(1.0 - tail)) })
}

/// BCa interval for the mean with a generator seeded from `seed`.
pub fn bootstrap_ci(values: &[f64], config: BootstrapConfig, seed: u64) -> Result<Interval, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps = bootstrap_replicates(values, config.replicates, &mut rng);
    bca_from_replicates(values, &reps, config.level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_is_degenerate() {
        let ci = bootstrap_ci(&[4.5; 12], BootstrapConfig::default(), 1).unwrap();
        assert_eq!((ci.low, ci.mean, ci.high), (4.5, 4.5, 4.5));
    }

    #[test]
    fn too_few_and_bad_level() {
        assert!(bootstrap_ci(&[1.0], BootstrapConfig::default(), 0).is_err());
        assert!(bootstrap_ci(&[1.0, 2.0], BootstrapConfig { level: 1.0, ..Default::default() }, 0).is_err());
    }

    #[test]
    fn symmetric_data_is_close_to_percentile_interval() {
        // mirrored pairs: zero acceleration, and replicate means rarely tie with the mean
        let values: Vec<f64> = (1..=15).flat_map(|i| [f64::from(i).sqrt(), -f64::from(i).sqrt()]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reps = bootstrap_replicates(&values, 2000, &mut rng);
        let ci = bca_from_replicates(&values, &reps, 0.95).unwrap();
        let mut sorted = reps.clone();
        sorted.sort_by(f64::total_cmp);
        // z0 is not exactly zero for a finite draw; allow a few ranks
        assert!(sorted[43] <= ci.low && ci.low <= sorted[55]);
        assert!(sorted[1943] <= ci.high && ci.high <= sorted[1955]);
        assert!(ci.low < 0.0 && ci.high > 0.0);
    }

    #[test]
    fn seeded() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        assert_eq!(bootstrap_ci(&v, BootstrapConfig::default(), 11).unwrap(), bootstrap_ci(&v, BootstrapConfig::default(), 11).unwrap());
    }
}
