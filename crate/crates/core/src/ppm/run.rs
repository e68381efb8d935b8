use crate::encoder::TokenId;

use super::trie::{NodeId, ROOT};
use super::{
    combine_geometric, distribution_from_levels, exclusion_floor, level_at, trim, ContextTrie, Cursor, Level,
    ModelConfig, ModelMode, OrderPolicy, PpmError, PredictionDistribution,
};

/// Read-only position of the test sequence inside the frozen training trie:
/// nodes of the stored suffixes of the tokens consumed so far, shortest first.
#[derive(Debug, Clone, Default)]
struct BaseCursor {
    suffixes: Vec<NodeId>,
}

impl BaseCursor {
    fn advance(&mut self, trie: &ContextTrie, symbol: TokenId) {
        let mut next = Vec::with_capacity(self.suffixes.len() + 1);
        // A substring that occurred has all of its suffixes occurring, so the
        // first missing extension ends the chain.
        for ctx in std::iter::once(ROOT).chain(self.suffixes.iter().copied()) {
            match trie.child(ctx, symbol) {
                Some(c) => next.push(c),
                None => break,
            }
        }
        next.truncate(trie.max_depth().unwrap_or(usize::MAX));
        self.suffixes = next;
    }

    fn levels(&self, trie: &ContextTrie) -> Vec<Level> {
        std::iter::once(ROOT).chain(self.suffixes.iter().copied()).map(|n| level_at(trie, n)).collect()
    }
}

fn merge(a: &Level, b: &Level) -> Level {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn merge_levels(a: Vec<Level>, b: Vec<Level>) -> Vec<Level> {
    let len = a.len().max(b.len());
    let empty = Level::new();
    let mut out: Vec<Level> = (0..len).map(|k| merge(a.get(k).unwrap_or(&empty), b.get(k).unwrap_or(&empty))).collect();
    trim(&mut out);
    out
}

/// A model stepping through one test sequence.
///
/// The training trie is borrowed and never modified; tokens of the test
/// sequence go into a private overlay trie that serves as the STM and, added
/// to the training counts, as the online part of LTM+.
#[derive(Debug, Clone)]
pub struct SequenceModel<'a> {
    config: ModelConfig,
    alphabet: usize,
    base: Option<&'a ContextTrie>,
    base_cursor: BaseCursor,
    overlay: ContextTrie,
    overlay_cursor: Cursor,
}

impl<'a> SequenceModel<'a> {
    pub fn new(config: ModelConfig, base: Option<&'a ContextTrie>, alphabet: usize) -> Result<Self, PpmError> {
        if config.mode.needs_base() && base.is_none() {
            return Err(PpmError::MissingBase(config.mode));
        }
        if let Some(b) = base {
            if b.alphabet() != alphabet {
                return Err(PpmError::AlphabetMismatch(b.alphabet(), alphabet));
            }
        }
        if !config.bias.is_finite() || config.bias < 0.0 {
            return Err(PpmError::BadBias(config.bias));
        }
        let depth = match config.order {
            OrderPolicy::Fixed(n) => Some(n),
            OrderPolicy::PpmStar => base.and_then(ContextTrie::max_depth),
        };
        Ok(Self {
            config,
            alphabet,
            base,
            base_cursor: BaseCursor::default(),
            overlay: ContextTrie::with_max_depth(alphabet, depth),
            overlay_cursor: Cursor::default(),
        })
    }

    fn base_levels(&self) -> Vec<Level> {
        let mut levels = self.base.map(|b| self.base_cursor.levels(b)).unwrap_or_default();
        trim(&mut levels);
        levels
    }

    fn overlay_levels(&self) -> Vec<Level> {
        let mut levels: Vec<Level> =
            self.overlay_cursor.context_nodes().map(|n| level_at(&self.overlay, n)).collect();
        trim(&mut levels);
        levels
    }

    /// Levels whose counts the online update is judged against.
    fn update_levels(&self) -> Vec<Level> {
        match self.config.mode {
            ModelMode::Stm => self.overlay_levels(),
            _ => merge_levels(self.base_levels(), self.overlay_levels()),
        }
    }

    /// Distribution for the next token.
    pub fn distribution(&self) -> PredictionDistribution {
        let c = &self.config;
        match c.mode {
            ModelMode::Ltm => distribution_from_levels(&self.base_levels(), c, self.alphabet),
            ModelMode::Stm => distribution_from_levels(&self.overlay_levels(), c, self.alphabet),
            ModelMode::LtmPlus => distribution_from_levels(&self.update_levels(), c, self.alphabet),
            ModelMode::BothPlus => {
                let long = distribution_from_levels(&self.update_levels(), c, self.alphabet);
                let short = distribution_from_levels(&self.overlay_levels(), c, self.alphabet);
                combine_geometric(&[&long, &short], c.bias).expect("bias and alphabet validated in new")
            }
        }
    }

    /// Consumes the token that actually occurred.
    pub fn observe(&mut self, symbol: TokenId) -> Result<(), PpmError> {
        if symbol as usize >= self.alphabet {
            return Err(PpmError::UnknownSymbol { symbol, alphabet: self.alphabet });
        }
        if self.config.mode != ModelMode::Ltm {
            let floor = if self.config.update_exclusion {
                exclusion_floor(&self.update_levels(), self.config.order, symbol)
            } else {
                0
            };
            self.overlay.push(&mut self.overlay_cursor, symbol, floor)?;
        }
        if let Some(b) = self.base {
            self.base_cursor.advance(b, symbol);
        }
        Ok(())
    }

    /// Forgets the current context but keeps everything learned online.
    pub fn restart_context(&mut self) {
        self.base_cursor = BaseCursor::default();
        self.overlay_cursor = Cursor::default();
    }

    /// Counts learned from the test sequence so far.
    pub fn online_counts(&self) -> &ContextTrie {
        &self.overlay
    }
}

/// Probability assigned to each token of `test`, predicting it from the
/// tokens before it and then learning it.
pub fn run_sequence(
    test: &[TokenId],
    config: &ModelConfig,
    base: Option<&ContextTrie>,
    alphabet: usize,
) -> Result<Vec<f64>, PpmError> {
    let mut model = SequenceModel::new(*config, base, alphabet)?;
    let mut out = Vec::with_capacity(test.len());
    for &symbol in test {
        if symbol as usize >= alphabet {
            return Err(PpmError::UnknownSymbol { symbol, alphabet });
        }
        out.push(model.distribution().probability(symbol));
        model.observe(symbol)?;
    }
    Ok(out)
}
