//! `(S, I)` chord types: `S` holds up to three distinct interval classes above
//! the bass in ascending order, `I` is the bass's chromatic scale degree
//! relative to the local tonic.

mod corpus;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ingest::{Slice, SliceStream};
use crate::keyscape::{KeyEstimate, KeyFinder};

pub use corpus::{read_corpus, read_vocabulary, write_corpus, write_vocabulary, CorpusFileError, EncodedCorpus, EncodedPiece};
pub use vocab::{build_vocabulary, TokenId, Vocabulary, VocabularyError};

/// Maximum number of interval classes kept above the bass.
pub const MAX_INTERVALS: usize = 3;

/// Size of the `S` domain under the reduction rules.
pub const S_DOMAIN_SIZE: usize = 233;

/// Size of the full `(S, I)` domain.
pub const TYPE_DOMAIN_SIZE: usize = S_DOMAIN_SIZE * 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChordTypeError {
    #[error("malformed chord type {0:?}")]
    Syntax(String),
    #[error("interval classes must be distinct, ascending and below 12: {0:?}")]
    NotCanonical(Vec<u8>),
    #[error("class 0 may only appear alone")]
    MisplacedUnison,
    #[error("scale degree {0} is not below 12")]
    BadDegree(u8),
}

/// The interval part `S`: a canonical (sorted, duplicate-free) list of at
/// most three interval classes. Undefined slots trail and are implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntervalSet {
    len: u8,
    slots: [u8; MAX_INTERVALS],
}

impl IntervalSet {
    pub const EMPTY: IntervalSet = IntervalSet { len: 0, slots: [0; MAX_INTERVALS] };

    /// Accepts only canonical input: strictly ascending classes in 0..12,
    /// at most three, with class 0 allowed only on its own.
    pub fn new(classes: &[u8]) -> Result<Self, ChordTypeError> {
        if classes.len() > MAX_INTERVALS
            || classes.iter().any(|&c| c >= 12)
            || classes.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ChordTypeError::NotCanonical(classes.to_vec()));
        }
        if classes.len() > 1 && classes[0] == 0 {
            return Err(ChordTypeError::MisplacedUnison);
        }
        let mut slots = [0; MAX_INTERVALS];
        slots[..classes.len()].copy_from_slice(classes);
        Ok(Self { len: classes.len() as u8, slots })
    }

    pub fn classes(&self) -> &[u8] {
        &self.slots[..self.len as usize]
    }

    /// Slot view with `None` for undefined entries.
    pub fn slots(&self) -> [Option<u8>; MAX_INTERVALS] {
        std::array::from_fn(|k| self.classes().get(k).copied())
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.slots().iter().map(|s| s.map_or("_".to_string(), |c| c.to_string())).collect();
        f.write_str(&parts.join("."))
    }
}

/// A chord type `(S, I)`. Text form `4.7._/0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChordType {
    pub intervals: IntervalSet,
    pub degree: u8,
}

impl ChordType {
    pub fn new(intervals: IntervalSet, degree: u8) -> Result<Self, ChordTypeError> {
        if degree >= 12 {
            return Err(ChordTypeError::BadDegree(degree));
        }
        Ok(Self { intervals, degree })
    }

    /// Only the bass pitch class sounds.
    pub fn is_monophonic(&self) -> bool {
        self.intervals.is_empty()
    }
}

impl fmt::Display for ChordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.intervals, self.degree)
    }
}

impl FromStr for ChordType {
    type Err = ChordTypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ChordTypeError::Syntax(s.to_string());
        let (set, degree) = s.split_once('/').ok_or_else(bad)?;
        let slots: Vec<&str> = set.split('.').collect();
        if slots.len() != MAX_INTERVALS {
            return Err(bad());
        }
        let mut classes = Vec::new();
        let mut seen_undefined = false;
        for slot in slots {
            if slot == "_" {
                seen_undefined = true;
            } else if seen_undefined {
                return Err(bad());
            } else {
                classes.push(slot.parse().map_err(|_| bad())?);
            }
        }
        ChordType::new(IntervalSet::new(&classes)?, degree.parse().map_err(|_| bad())?)
    }
}

/// What to keep when more than three distinct classes sit above the bass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowPolicy {
    /// The three smallest interval classes.
    #[default]
    Smallest,
    /// The three classes realised by the most pitches in the slice, ties to the smaller class.
    MostFrequent,
}

impl FromStr for OverflowPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smallest" => Ok(Self::Smallest),
            "most-frequent" => Ok(Self::MostFrequent),
            other => Err(format!("unknown overflow policy {other:?} (expected smallest or most-frequent)")),
        }
    }
}

/// Reduces interval classes (any order, repeats allowed) above a bass to `S`.
///
/// Class 0 (octave doublings of the bass) survives only when nothing else does.
pub fn reduce_intervals(classes: &[u8], policy: OverflowPolicy) -> IntervalSet {
    let mut freq = [0usize; 12];
    for &c in classes {
        freq[(c % 12) as usize] += 1;
    }
    let mut distinct: Vec<u8> = (1..12u8).filter(|&c| freq[c as usize] > 0).collect();
    if distinct.is_empty() {
        return if freq[0] > 0 { IntervalSet::new(&[0]).expect("canonical") } else { IntervalSet::EMPTY };
    }
    if distinct.len() > MAX_INTERVALS {
        if policy == OverflowPolicy::MostFrequent {
            distinct.sort_by_key(|&c| (std::cmp::Reverse(freq[c as usize]), c));
        }
        distinct.truncate(MAX_INTERVALS);
        distinct.sort_unstable();
    }
    IntervalSet::new(&distinct).expect("canonical")
}

/// Encodes one slice relative to the tonic of `key`. The mode is not used.
pub fn encode_slice(slice: &Slice, key: &KeyEstimate, policy: OverflowPolicy) -> ChordType {
    let bass = slice.bass();
    let classes: Vec<u8> = slice.pitches().iter().skip(1).map(|&p| (p - bass) % 12).collect();
    let degree = (bass % 12 + 12 - key.tonic % 12) % 12;
    ChordType { intervals: reduce_intervals(&classes, policy), degree }
}

/// Encodes a stream using the key finder's per-onset trace.
pub fn encode_stream(stream: &SliceStream, finder: &KeyFinder, policy: OverflowPolicy) -> Vec<ChordType> {
    let trace = finder.trace(stream);
    stream.slices.iter().zip(&trace).map(|(s, k)| encode_slice(s, &k.key, policy)).collect()
}

/// Every `S` value the reduction can produce, generated combinatorially:
/// the empty set, `{0}`, and all 1-, 2- and 3-subsets of classes 1..=11.
pub fn enumerate_s_domain() -> BTreeSet<IntervalSet> {
    let mut out = BTreeSet::new();
    out.insert(IntervalSet::EMPTY);
    out.insert(IntervalSet::new(&[0]).expect("canonical"));
    for a in 1..12u8 {
        out.insert(IntervalSet::new(&[a]).expect("canonical"));
        for b in a + 1..12 {
            out.insert(IntervalSet::new(&[a, b]).expect("canonical"));
            for c in b + 1..12 {
                out.insert(IntervalSet::new(&[a, b, c]).expect("canonical"));
            }
        }
    }
    out
}

/// The theoretical `(S, I)` domain in sorted order.
pub fn enumerate_type_domain() -> Vec<ChordType> {
    let mut out: Vec<ChordType> = enumerate_s_domain()
        .into_iter()
        .flat_map(|s| (0..12).map(move |degree| ChordType { intervals: s, degree }))
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyscape::Mode;
    use num_rational::Ratio;

    fn key(tonic: u8) -> KeyEstimate {
        KeyEstimate { tonic, mode: Mode::Major, score: 1.0 }
    }

    fn slice(pitches: &[u8]) -> Slice {
        Slice::new(Ratio::from_integer(0), pitches.iter().copied().collect()).unwrap()
    }

    fn s(text: &str) -> IntervalSet {
        text.parse::<ChordType>().map(|t| t.intervals).unwrap()
    }

    #[test]
    fn worked_reductions() {
        let p = OverflowPolicy::Smallest;
        assert_eq!(reduce_intervals(&[4, 7, 0], p), s("4.7._/0"));
        assert_eq!(reduce_intervals(&[7, 4, 0], p), s("4.7._/0"));
        assert_eq!(reduce_intervals(&[4, 4, 10], p), s("4.10._/0"));
        assert_eq!(reduce_intervals(&[4, 10, 10], p), s("4.10._/0"));
    }

    #[test]
    fn bass_only_and_octave_doubling() {
        let t = encode_slice(&slice(&[55]), &key(7), OverflowPolicy::Smallest);
        assert_eq!(t.to_string(), "_._._/0");
        assert!(t.is_monophonic());
        let t = encode_slice(&slice(&[43, 55, 67]), &key(7), OverflowPolicy::Smallest);
        assert_eq!(t.to_string(), "0._._/0");
        assert!(!t.is_monophonic());
    }

    #[test]
    fn first_chord_of_the_chorale_fragment() {
        // G2 B3 D4 G4 in G major
        let t = encode_slice(&slice(&[43, 59, 62, 67]), &key(7), OverflowPolicy::Smallest);
        assert_eq!(t.to_string(), "4.7._/0");
    }

    #[test]
    fn overflow_policies() {
        // classes 2, 4, 7, 11 above C; 11 doubled twice, 7 doubled once
        let pitches = [48, 50, 52, 55, 67, 59, 71, 83];
        let smallest = encode_slice(&slice(&pitches), &key(0), OverflowPolicy::Smallest);
        assert_eq!(smallest.intervals.classes(), &[2, 4, 7]);
        let frequent = encode_slice(&slice(&pitches), &key(0), OverflowPolicy::MostFrequent);
        assert_eq!(frequent.intervals.classes(), &[2, 7, 11]);
    }

    #[test]
    fn scale_degree_wraps() {
        let t = encode_slice(&slice(&[50, 54, 57]), &key(7), OverflowPolicy::Smallest);
        assert_eq!(t.degree, 7);
        let t = encode_slice(&slice(&[42]), &key(7), OverflowPolicy::Smallest);
        assert_eq!(t.degree, 11);
    }

    #[test]
    fn domain_counts() {
        let domain = enumerate_s_domain();
        assert_eq!(domain.len(), S_DOMAIN_SIZE);
        assert_eq!(domain.iter().filter(|s| s.classes().len() == 2).count(), 55);
        assert_eq!(enumerate_type_domain().len(), TYPE_DOMAIN_SIZE);
    }

    #[test]
    fn text_form_round_trips_and_rejects_junk() {
        for t in enumerate_type_domain() {
            assert_eq!(t.to_string().parse::<ChordType>().unwrap(), t);
        }
        for junk in ["4.7/0", "7.4._/0", "_.4._/0", "0.4._/0", "4.7._/12", "4.4._/0", "4.7._"] {
            assert!(junk.parse::<ChordType>().is_err(), "{junk}");
        }
    }
}
