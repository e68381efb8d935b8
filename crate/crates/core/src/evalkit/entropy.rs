use super::EvalError;

/// `-log2 p`, in bits.
pub fn information_content(p: f64) -> f64 {
    -p.log2()
}

/// Mean information content of a sequence of predicted probabilities, in
/// bits per token.
pub fn cross_entropy(probabilities: &[f64]) -> Result<f64, EvalError> {
    if probabilities.is_empty() {
        return Err(EvalError::EmptySequence);
    }
    let mut total = 0.0;
    for (index, &p) in probabilities.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(EvalError::BadProbability { index, p });
        }
        total += information_content(p);
    }
    Ok(total / probabilities.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_identities() {
        assert_eq!(cross_entropy(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cross_entropy(&[0.5, 0.25, 0.125]).unwrap(), 2.0);
        for (v, h) in [(2usize, 1.0), (8, 3.0), (256, 8.0)] {
            assert_eq!(cross_entropy(&vec![1.0 / v as f64; 17]).unwrap(), h);
        }
    }

    #[test]
    fn rejects_non_probabilities() {
        assert!(matches!(cross_entropy(&[]), Err(EvalError::EmptySequence)));
        assert!(matches!(cross_entropy(&[0.5, 0.0]), Err(EvalError::BadProbability { index: 1, .. })));
        assert!(matches!(cross_entropy(&[1.5]), Err(EvalError::BadProbability { .. })));
        assert!(matches!(cross_entropy(&[f64::NAN]), Err(EvalError::BadProbability { .. })));
    }

    #[test]
    fn larger_probability_lowers_entropy() {
        let p = [0.2, 0.4, 0.1, 0.7];
        let h = cross_entropy(&p).unwrap();
        for i in 0..p.len() {
            let mut q = p;
            q[i] = (q[i] * 1.1).min(1.0);
            assert!(cross_entropy(&q).unwrap() < h);
        }
    }

    #[test]
    fn concatenation_is_token_weighted_mean() {
        let a = [0.3, 0.9, 0.05];
        let b = [0.6, 0.2, 0.2, 0.99, 0.5];
        let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
        let weighted = (3.0 * cross_entropy(&a).unwrap() + 5.0 * cross_entropy(&b).unwrap()) / 8.0;
        assert!((cross_entropy(&joined).unwrap() - weighted).abs() < 1e-12);
    }
}
