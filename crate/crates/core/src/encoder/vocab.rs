use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{enumerate_type_domain, ChordType};

/// Dense vocabulary index.
pub type TokenId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("chord type {0} is not in the vocabulary")]
    UnknownType(ChordType),
    #[error("token id {0} is out of range")]
    UnknownId(TokenId),
    #[error("duplicate chord type {0}")]
    Duplicate(ChordType),
}

/// Bijection between chord types and ids `0..len`, with corpus frequencies.
///
/// Ids follow the sort order of [`ChordType`], so the assignment does not
/// depend on the order the corpus was read in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    types: Vec<ChordType>,
    index: HashMap<ChordType, TokenId>,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Builds from (type, count) pairs; the types must be distinct.
    pub fn from_counts(entries: impl IntoIterator<Item = (ChordType, u64)>) -> Result<Self, VocabularyError> {
        let mut sorted: BTreeMap<ChordType, u64> = BTreeMap::new();
        for (t, c) in entries {
            if sorted.insert(t, c).is_some() {
                return Err(VocabularyError::Duplicate(t));
            }
        }
        let types: Vec<ChordType> = sorted.keys().copied().collect();
        let counts = sorted.into_values().collect();
        let index = types.iter().enumerate().map(|(i, &t)| (t, i as TokenId)).collect();
        Ok(Self { types, index, counts })
    }

    /// All 233 x 12 theoretical types with zero counts.
    pub fn theoretical() -> Self {
        Self::from_counts(enumerate_type_domain().into_iter().map(|t| (t, 0))).expect("domain is duplicate-free")
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn id(&self, t: &ChordType) -> Result<TokenId, VocabularyError> {
        self.index.get(t).copied().ok_or(VocabularyError::UnknownType(*t))
    }

    pub fn chord_type(&self, id: TokenId) -> Result<ChordType, VocabularyError> {
        self.types.get(id as usize).copied().ok_or(VocabularyError::UnknownId(id))
    }

    pub fn count(&self, id: TokenId) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn types(&self) -> &[ChordType] {
        &self.types
    }

    /// Number of types with a nonzero count.
    pub fn observed(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Adds observations of `seq` to the counts.
    pub fn observe(&mut self, seq: &[TokenId]) -> Result<(), VocabularyError> {
        for &id in seq {
            *self.counts.get_mut(id as usize).ok_or(VocabularyError::UnknownId(id))? += 1;
        }
        Ok(())
    }

    pub fn encode(&self, seq: &[ChordType]) -> Result<Vec<TokenId>, VocabularyError> {
        seq.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, seq: &[TokenId]) -> Result<Vec<ChordType>, VocabularyError> {
        seq.iter().map(|&id| self.chord_type(id)).collect()
    }
}

/// One id per distinct type observed across `corpus`, with counts.
pub fn build_vocabulary<'a>(corpus: impl IntoIterator<Item = &'a [ChordType]>) -> Vocabulary {
    let mut counts: BTreeMap<ChordType, u64> = BTreeMap::new();
    for seq in corpus {
        for t in seq {
            *counts.entry(*t).or_default() += 1;
        }
    }
    Vocabulary::from_counts(counts).expect("map keys are distinct")
}
