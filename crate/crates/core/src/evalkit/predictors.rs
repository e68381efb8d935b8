use std::collections::HashSet;

use crate::encoder::{TokenId, Vocabulary};

use super::EvalError;

/// Per-composition corpus features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predictors {
    pub n_tokens: usize,
    pub n_types: usize,
    /// Share of tokens whose type is among the least frequent tenth of types.
    pub improbable: f64,
    /// Share of tokens with an empty interval set.
    pub monophonic: f64,
    /// Share of positions after the first that repeat the previous token.
    pub repetition: f64,
}

impl Predictors {
    pub const NAMES: [&'static str; 5] = ["N_tokens", "N_types", "Improbable", "Monophonic", "Repetition"];

    pub fn values(&self) -> [f64; 5] {
        [self.n_tokens as f64, self.n_types as f64, self.improbable, self.monophonic, self.repetition]
    }
}

/// One evaluated composition under one model.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub composition: String,
    pub dataset: String,
    pub model: String,
    /// Cross-entropy in bits per token.
    pub entropy: f64,
    pub predictors: Predictors,
}

/// Flags the `ceil(0.1 * observed)` observed types with the lowest corpus
/// counts, lower id first among equal counts. Unobserved types are never
/// flagged.
pub fn improbable_types(counts: &[u64]) -> Vec<bool> {
    let mut observed: Vec<(u64, usize)> = counts.iter().enumerate().filter(|&(_, &c)| c > 0).map(|(i, &c)| (c, i)).collect();
    observed.sort_unstable();
    let take = (observed.len() as f64 * 0.1).ceil() as usize;
    let mut flags = vec![false; counts.len()];
    for &(_, id) in &observed[..take] {
        flags[id] = true;
    }
    flags
}

/// Corpus-level facts the predictors are measured against, fixed once per
/// experiment.
#[derive(Debug, Clone)]
pub struct PredictorContext {
    improbable: Vec<bool>,
    monophonic: Vec<bool>,
}

impl PredictorContext {
    /// Uses the vocabulary's counts as the zeroth-order distribution.
    pub fn new(vocabulary: &Vocabulary) -> Self {
        Self {
            improbable: improbable_types(vocabulary.counts()),
            monophonic: vocabulary.types().iter().map(|t| t.is_monophonic()).collect(),
        }
    }

    pub fn is_improbable(&self, id: TokenId) -> bool {
        self.improbable[id as usize]
    }

    pub fn compute(&self, tokens: &[TokenId]) -> Result<Predictors, EvalError> {
        if tokens.is_empty() {
            return Err(EvalError::EmptySequence);
        }
        if let Some(&id) = tokens.iter().find(|&&id| id as usize >= self.improbable.len()) {
            return Err(EvalError::TokenOutOfRange { id, size: self.improbable.len() });
        }
        let n = tokens.len();
        let share = |k: usize| k as f64 / n as f64;
        let repeats = tokens.windows(2).filter(|w| w[0] == w[1]).count();
        Ok(Predictors {
            n_tokens: n,
            n_types: tokens.iter().collect::<HashSet<_>>().len(),
            improbable: share(tokens.iter().filter(|&&t| self.improbable[t as usize]).count()),
            monophonic: share(tokens.iter().filter(|&&t| self.monophonic[t as usize]).count()),
            repetition: if n > 1 { repeats as f64 / (n - 1) as f64 } else { 0.0 },
        })
    }
}
