use super::{PpmError, PredictionDistribution};

/// Smallest normalised entropy used for weighting; keeps weights finite.
const MIN_RELATIVE_ENTROPY: f64 = 1e-12;

/// Weight of a distribution in the combination: its entropy relative to the
/// maximum `log2 V`, raised to `-bias`. Confident models weigh more.
pub fn entropy_weight(dist: &PredictionDistribution, bias: f64) -> f64 {
    let max = (dist.len() as f64).log2();
    if max == 0.0 {
        return 1.0;
    }
    let relative = (dist.entropy_bits() / max).max(MIN_RELATIVE_ENTROPY);
    relative.powf(-bias)
}

/// Weighted geometric mean of distributions over one alphabet, renormalised.
pub fn combine_geometric(dists: &[&PredictionDistribution], bias: f64) -> Result<PredictionDistribution, PpmError> {
    if !bias.is_finite() || bias < 0.0 {
        return Err(PpmError::BadBias(bias));
    }
    let first = dists.first().ok_or(PpmError::NothingToCombine)?;
    let alphabet = first.len();
    if let Some(other) = dists.iter().find(|d| d.len() != alphabet) {
        return Err(PpmError::AlphabetMismatch(alphabet, other.len()));
    }
    let weights: Vec<f64> = dists.iter().map(|d| entropy_weight(d, bias)).collect();
    let total: f64 = weights.iter().sum();
    let mut log_p = vec![0.0; alphabet];
    for (d, w) in dists.iter().zip(&weights) {
        for (acc, &p) in log_p.iter_mut().zip(d.probabilities()) {
            *acc += w / total * p.ln();
        }
    }
    let peak = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_p.iter().map(|&l| (l - peak).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(PredictionDistribution::from_vec(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> PredictionDistribution {
        PredictionDistribution::from_vec(p.to_vec())
    }

    #[test]
    fn idempotent() {
        let p = dist(&[0.5, 0.3, 0.2]);
        for b in [0.0, 1.0, 2.0, 7.5] {
            let c = combine_geometric(&[&p, &p], b).unwrap();
            for (a, b) in c.probabilities().iter().zip(p.probabilities()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn equal_weights_give_normalised_sqrt() {
        // q is a permutation of p, so both have the same entropy and weight
        let p = dist(&[0.6, 0.3, 0.1]);
        let q = dist(&[0.1, 0.6, 0.3]);
        let c = combine_geometric(&[&p, &q], 2.0).unwrap();
        let raw: Vec<f64> = p.probabilities().iter().zip(q.probabilities()).map(|(a, b)| (a * b).sqrt()).collect();
        let z: f64 = raw.iter().sum();
        for (got, r) in c.probabilities().iter().zip(&raw) {
            assert!((got - r / z).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_mismatch_and_bad_bias() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(combine_geometric(&[&p, &q], 1.0), Err(PpmError::AlphabetMismatch(2, 3)));
        assert_eq!(combine_geometric(&[], 1.0), Err(PpmError::NothingToCombine));
        assert!(combine_geometric(&[&p], -1.0).is_err());
    }

    #[test]
    fn single_symbol_alphabet() {
        let p = dist(&[1.0]);
        assert_eq!(combine_geometric(&[&p, &p], 2.0).unwrap().probabilities(), &[1.0]);
    }
}
