//! Variable-order context models in the PPM family.
//!
//! Predictions blend the continuation counts of every matched context order
//! with escape method C (escape mass `t / (n + t)` at an order with `n`
//! observations of `t` distinct symbols), bottoming out in a uniform
//! distribution over the closed alphabet. The starting order is chosen by the
//! PPM* rule or a fixed bound.

mod combine;
mod run;
mod snapshot;
mod trie;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::encoder::TokenId;

pub use combine::{combine_geometric, entropy_weight};
pub use run::{run_sequence, SequenceModel};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotError};
pub use trie::{ContextTrie, Cursor};

#[derive(Debug, Error, PartialEq)]
pub enum PpmError {
    #[error("symbol {symbol} is outside the alphabet of {alphabet}")]
    UnknownSymbol { symbol: TokenId, alphabet: usize },
    #[error("alphabet sizes differ: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("{0} needs a trained long-term model")]
    MissingBase(ModelMode),
    #[error("combination needs at least one distribution")]
    NothingToCombine,
    #[error("bias must be finite and non-negative, got {0}")]
    BadBias(f64),
    #[error("not a distribution: entries must be positive and sum to 1")]
    NotADistribution,
}

/// Which sub-models produce the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelMode {
    /// Long-term model, frozen after training.
    Ltm,
    /// Long-term model, also updated with each test token once predicted.
    LtmPlus,
    /// Short-term model: starts empty for each piece, updated after each token.
    Stm,
    /// LTM+ and STM combined by an entropy-weighted geometric mean.
    BothPlus,
}

impl ModelMode {
    pub fn needs_base(self) -> bool {
        !matches!(self, ModelMode::Stm)
    }
}

impl fmt::Display for ModelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelMode::Ltm => "LTM",
            ModelMode::LtmPlus => "LTM+",
            ModelMode::Stm => "STM",
            ModelMode::BothPlus => "BOTH+",
        })
    }
}

impl FromStr for ModelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LTM" => Ok(Self::Ltm),
            "LTM+" => Ok(Self::LtmPlus),
            "STM" => Ok(Self::Stm),
            "BOTH+" => Ok(Self::BothPlus),
            _ => Err(format!("unknown model {s:?} (expected LTM, LTM+, STM or BOTH+)")),
        }
    }
}

/// How the starting context order is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderPolicy {
    /// Shortest deterministic matched context, else the longest matched one.
    PpmStar,
    /// Longest matched context no longer than the bound.
    Fixed(usize),
}

impl fmt::Display for OrderPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderPolicy::PpmStar => f.write_str("*"),
            OrderPolicy::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for OrderPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "*" {
            Ok(Self::PpmStar)
        } else {
            s.parse().map(Self::Fixed).map_err(|_| format!("order must be \"*\" or an integer, got {s:?}"))
        }
    }
}

/// How lower orders contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Blending {
    /// Every order down to the uniform base contributes, weighted by the
    /// escape probabilities above it.
    #[default]
    Interpolated,
    /// Lower orders only cover symbols unseen at higher orders.
    Backoff,
}

/// Escape probability estimator. Only method C is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EscapeMethod {
    #[default]
    C,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub mode: ModelMode,
    pub order: OrderPolicy,
    pub escape: EscapeMethod,
    pub blending: Blending,
    /// Exponent applied to normalised entropies when combining models.
    pub bias: f64,
    pub update_exclusion: bool,
}

pub const DEFAULT_BIAS: f64 = 2.0;

impl ModelConfig {
    pub fn new(mode: ModelMode) -> Self {
        Self {
            mode,
            order: OrderPolicy::PpmStar,
            escape: EscapeMethod::C,
            blending: Blending::Interpolated,
            bias: DEFAULT_BIAS,
            update_exclusion: false,
        }
    }

    pub fn with_order(self, order: OrderPolicy) -> Self {
        Self { order, ..self }
    }

    /// Compact label, e.g. `BOTH+ order=* escape=C b=2 exclusion=off`.
    pub fn describe(&self) -> String {
        format!(
            "{} order={} escape=C blending={} b={} exclusion={}",
            self.mode,
            self.order,
            match self.blending {
                Blending::Interpolated => "interpolated",
                Blending::Backoff => "backoff",
            },
            self.bias,
            if self.update_exclusion { "on" } else { "off" }
        )
    }
}

/// Probability of every symbol in the alphabet. Entries are positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDistribution(Vec<f64>);

impl PredictionDistribution {
    pub fn uniform(alphabet: usize) -> Self {
        Self(vec![1.0 / alphabet as f64; alphabet])
    }

    /// Accepts positive entries summing to 1 within 1e-9.
    pub fn new(p: Vec<f64>) -> Result<Self, PpmError> {
        let ok = !p.is_empty() && p.iter().all(|&x| x > 0.0 && x.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if ok {
            Ok(Self(p))
        } else {
            Err(PpmError::NotADistribution)
        }
    }

    pub(crate) fn from_vec(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn probability(&self, symbol: TokenId) -> f64 {
        self.0[symbol as usize]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        -self.0.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
    }
}

/// Continuation counts of one context order, sorted by symbol, zero counts omitted.
pub(crate) type Level = Vec<(TokenId, u64)>;

/// Continuation counts for the context orders 0, 1, ... of the current
/// context, up to the longest stored one. An empty level is unmatched.
pub(crate) fn levels_for_context(trie: &ContextTrie, context: &[TokenId]) -> Vec<Level> {
    let deepest = trie.max_depth().map_or(context.len(), |d| d.min(context.len()));
    let mut levels = Vec::new();
    for order in 0..=deepest {
        let Some(node) = trie.find(&context[context.len() - order..]) else { break };
        levels.push(level_at(trie, node));
    }
    trim(&mut levels);
    levels
}

pub(crate) fn level_at(trie: &ContextTrie, node: trie::NodeId) -> Level {
    trie.children(node)
        .iter()
        .map(|&(s, c)| (s, trie.count(c)))
        .filter(|&(_, c)| c > 0)
        .collect()
}

pub(crate) fn trim(levels: &mut Vec<Level>) {
    while levels.last().is_some_and(Vec::is_empty) {
        levels.pop();
    }
}

/// Order at which blending starts, or `None` if nothing is matched.
pub(crate) fn start_order(levels: &[Level], policy: OrderPolicy) -> Option<usize> {
    let longest = levels.iter().rposition(|l| !l.is_empty())?;
    Some(match policy {
        OrderPolicy::PpmStar => levels.iter().position(|l| l.len() == 1).unwrap_or(longest),
        OrderPolicy::Fixed(bound) => {
            (0..=bound.min(longest)).rev().find(|&k| !levels[k].is_empty()).unwrap_or(0)
        }
    })
}

pub(crate) fn distribution_from_levels(levels: &[Level], config: &ModelConfig, alphabet: usize) -> PredictionDistribution {
    let Some(start) = start_order(levels, config.order) else {
        return PredictionDistribution::uniform(alphabet);
    };
    let mut p = vec![0.0; alphabet];
    match config.blending {
        Blending::Interpolated => {
            let mut weight = 1.0;
            for level in levels[..=start].iter().rev().filter(|l| !l.is_empty()) {
                let n: u64 = level.iter().map(|&(_, c)| c).sum();
                let t = level.len() as f64;
                let denom = n as f64 + t;
                for &(s, c) in level {
                    p[s as usize] += weight * c as f64 / denom;
                }
                weight *= t / denom;
            }
            let floor = weight / alphabet as f64;
            p.iter_mut().for_each(|x| *x += floor);
        }
        Blending::Backoff => {
            let mut excluded = vec![false; alphabet];
            let mut mass = 1.0;
            for level in levels[..=start].iter().rev() {
                let fresh: Vec<(TokenId, u64)> = level.iter().copied().filter(|&(s, _)| !excluded[s as usize]).collect();
                let n: u64 = fresh.iter().map(|&(_, c)| c).sum();
                if n == 0 {
                    continue;
                }
                let t = fresh.len() as f64;
                let denom = n as f64 + t;
                for &(s, c) in &fresh {
                    p[s as usize] = mass * c as f64 / denom;
                    excluded[s as usize] = true;
                }
                mass *= t / denom;
            }
            let open = excluded.iter().filter(|&&e| !e).count();
            if open == 0 {
                let total: f64 = p.iter().sum();
                p.iter_mut().for_each(|x| *x /= total);
            } else {
                let share = mass / open as f64;
                for (x, _) in p.iter_mut().zip(&excluded).filter(|(_, &e)| !e) {
                    *x = share;
                }
            }
        }
    }
    PredictionDistribution(p)
}

/// Predicts the symbol following `context` from the counts in `trie`.
pub fn predict(trie: &ContextTrie, context: &[TokenId], config: &ModelConfig) -> Result<PredictionDistribution, PpmError> {
    if let Some(&bad) = context.iter().find(|&&s| s as usize >= trie.alphabet()) {
        return Err(PpmError::UnknownSymbol { symbol: bad, alphabet: trie.alphabet() });
    }
    let levels = levels_for_context(trie, context);
    Ok(distribution_from_levels(&levels, config, trie.alphabet()))
}

/// Lowest order whose counts an update-excluded model increments for
/// `symbol`: the highest order at or below `start` that had already seen it,
/// or 0 if none has.
pub(crate) fn exclusion_floor(levels: &[Level], policy: OrderPolicy, symbol: TokenId) -> usize {
    let Some(start) = start_order(levels, policy) else { return 0 };
    (0..=start)
        .rev()
        .find(|&k| levels[k].binary_search_by_key(&symbol, |&(s, _)| s).is_ok())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(order: OrderPolicy) -> ModelConfig {
        ModelConfig::new(ModelMode::Ltm).with_order(order)
    }

    #[test]
    fn aaab_order_zero_closed_form() {
        let mut t = ContextTrie::new(2);
        t.train_sequence(&[0, 0, 0, 1]).unwrap();
        let d = predict(&t, &[], &config(OrderPolicy::Fixed(0))).unwrap();
        // p(a) = 3/6 + (2/6)(1/2), p(b) = 1/6 + (2/6)(1/2)
        assert!((d.probability(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.probability(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn untrained_is_uniform() {
        let t = ContextTrie::new(5);
        for order in [OrderPolicy::PpmStar, OrderPolicy::Fixed(3)] {
            let d = predict(&t, &[1, 2], &config(order)).unwrap();
            assert!(d.probabilities().iter().all(|&p| p == 0.2));
        }
    }

    #[test]
    fn ppm_star_prefers_shortest_deterministic_context() {
        // after "0 1" only "2" has ever followed; order 1 context "1" is deterministic too,
        // order 0 is not.
        let mut t = ContextTrie::new(3);
        t.train_sequence(&[0, 1, 2, 0, 1, 2, 2]).unwrap();
        let levels = levels_for_context(&t, &[0, 1]);
        assert_eq!(levels[1], vec![(2, 2)]);
        assert_eq!(start_order(&levels, OrderPolicy::PpmStar), Some(1));
        assert_eq!(start_order(&levels, OrderPolicy::Fixed(5)), Some(2));
        assert_eq!(start_order(&levels, OrderPolicy::Fixed(0)), Some(0));
    }

    #[test]
    fn ppm_star_falls_back_to_longest() {
        let mut t = ContextTrie::new(2);
        t.train_sequence(&[0, 1, 0, 0, 1, 1]).unwrap();
        let levels = levels_for_context(&t, &[0, 1]);
        assert!(levels.iter().all(|l| l.len() != 1));
        assert_eq!(start_order(&levels, OrderPolicy::PpmStar), Some(levels.len() - 1));
    }

    #[test]
    fn backoff_sums_to_one() {
        let mut t = ContextTrie::new(4);
        t.train_sequence(&[0, 1, 2, 0, 1, 3, 0, 1, 2]).unwrap();
        let cfg = ModelConfig { blending: Blending::Backoff, ..config(OrderPolicy::PpmStar) };
        for ctx in [&[][..], &[0], &[0, 1], &[3, 3]] {
            let d = predict(&t, ctx, &cfg).unwrap();
            assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.probabilities().iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn bad_context_symbol() {
        let t = ContextTrie::new(2);
        assert!(predict(&t, &[7], &config(OrderPolicy::PpmStar)).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("both+".parse::<ModelMode>().unwrap(), ModelMode::BothPlus);
        assert_eq!("*".parse::<OrderPolicy>().unwrap(), OrderPolicy::PpmStar);
        assert_eq!("3".parse::<OrderPolicy>().unwrap(), OrderPolicy::Fixed(3));
        assert!("x".parse::<OrderPolicy>().is_err());
        assert_eq!(ModelConfig::new(ModelMode::BothPlus).describe(), "BOTH+ order=* escape=C blending=interpolated b=2 exclusion=off");
    }

    fn level(counts: &[u64]) -> Level {
        counts.iter().enumerate().filter(|&(_, &c)| c > 0).map(|(s, &c)| (s as TokenId, c)).collect()
    }

    proptest::proptest! {
        #[test]
        fn order_one_observation_never_lowers_its_probability(
            order0 in proptest::collection::vec(0u64..6, 4),
            order1 in proptest::collection::vec(0u64..6, 4),
            x in 0u32..4,
        ) {
            let cfg = config(OrderPolicy::Fixed(1));
            let mut bumped = order1.clone();
            bumped[x as usize] += 1;
            let before = distribution_from_levels(&[level(&order0), level(&order1)], &cfg, 4);
            let after = distribution_from_levels(&[level(&order0), level(&bumped)], &cfg, 4);
            proptest::prop_assert!(after.probability(x) >= before.probability(x) - 1e-15);
        }
    }
}
