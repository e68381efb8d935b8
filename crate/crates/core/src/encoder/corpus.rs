//! Encoded-corpus files.
//!
//! Corpus file, one composition per line after the header:
//!
//! ```text
//! #chordseq encoded-corpus v1
//! <composition>\t<dataset>\t<id> <id> <id> ...
//! ```
//!
//! Vocabulary sidecar, one type per line in id order:
//!
//! ```text
//! #chordseq vocabulary v1
//! <id>\t<S/I, e.g. 4.7._/0>\t<count>
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::{ChordType, TokenId, Vocabulary};

pub const CORPUS_HEADER: &str = "#chordseq encoded-corpus v1";
pub const VOCABULARY_HEADER: &str = "#chordseq vocabulary v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("composition {composition:?} uses id {id}, but the vocabulary has {size} types")]
    IdOutOfRange { composition: String, id: TokenId, size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPiece {
    pub composition: String,
    pub dataset: String,
    pub tokens: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    pub pieces: Vec<EncodedPiece>,
    pub vocabulary: Vocabulary,
}

impl EncodedCorpus {
    /// Checks every token against the vocabulary.
    pub fn validate(&self) -> Result<(), CorpusFileError> {
        for p in &self.pieces {
            if let Some(&id) = p.tokens.iter().find(|&&id| id as usize >= self.vocabulary.len()) {
                return Err(CorpusFileError::IdOutOfRange {
                    composition: p.composition.clone(),
                    id,
                    size: self.vocabulary.len(),
                });
            }
        }
        Ok(())
    }

    pub fn token_count(&self) -> usize {
        self.pieces.iter().map(|p| p.tokens.len()).sum()
    }
}

pub fn write_corpus(pieces: &[EncodedPiece]) -> String {
    let mut out = format!("{CORPUS_HEADER}\n");
    for p in pieces {
        let ids: Vec<String> = p.tokens.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{}\t{}\t{}", p.composition, p.dataset, ids.join(" "));
    }
    out
}

pub fn read_corpus(text: &str) -> Result<Vec<EncodedPiece>, CorpusFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    if lines.next().map(|(_, l)| l) != Some(CORPUS_HEADER) {
        return Err(syntax(1, format!("expected header {CORPUS_HEADER:?}")));
    }
    let mut pieces = Vec::new();
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(syntax(line, "expected composition, dataset and token ids"));
        }
        let tokens = fields[2]
            .split_whitespace()
            .map(|t| t.parse::<TokenId>().map_err(|_| syntax(line, format!("bad token id {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        pieces.push(EncodedPiece { composition: fields[0].to_string(), dataset: fields[1].to_string(), tokens });
    }
    Ok(pieces)
}

pub fn write_vocabulary(vocab: &Vocabulary) -> String {
    let mut out = format!("{VOCABULARY_HEADER}\n");
    for (id, t) in vocab.types().iter().enumerate() {
        let _ = writeln!(out, "{id}\t{t}\t{}", vocab.counts()[id]);
    }
    out
}

pub fn read_vocabulary(text: &str) -> Result<Vocabulary, CorpusFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    if lines.next().map(|(_, l)| l) != Some(VOCABULARY_HEADER) {
        return Err(syntax(1, format!("expected header {VOCABULARY_HEADER:?}")));
    }
    let mut entries = Vec::new();
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(syntax(line, "expected id, chord type and count"));
        }
        let id: usize = fields[0].parse().map_err(|_| syntax(line, "bad id"))?;
        if id != entries.len() {
            return Err(syntax(line, format!("ids must be dense and ascending; expected {}", entries.len())));
        }
        let t: ChordType = fields[1].parse().map_err(|e| syntax(line, format!("{e}")))?;
        let count: u64 = fields[2].parse().map_err(|_| syntax(line, "bad count"))?;
        entries.push((t, count));
    }
    let vocab = Vocabulary::from_counts(entries.iter().copied()).map_err(|e| syntax(0, e.to_string()))?;
    if vocab.types().iter().zip(&entries).any(|(a, (b, _))| a != b) {
        return Err(syntax(0, "vocabulary types must be listed in sorted order"));
    }
    Ok(vocab)
}

fn syntax(line: usize, message: impl Into<String>) -> CorpusFileError {
    CorpusFileError::Syntax { line, message: message.into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::build_vocabulary;

    #[test]
    fn corpus_and_vocabulary_round_trip() {
        let types: Vec<ChordType> = ["4.7._/0", "3.8._/4", "4.7._/0", "_._._/7"].iter().map(|s| s.parse().unwrap()).collect();
        let vocab = build_vocabulary([&types[..]]);
        let pieces = vec![
            EncodedPiece { composition: "a".into(), dataset: "bach".into(), tokens: vocab.encode(&types).unwrap() },
            EncodedPiece { composition: "b".into(), dataset: "bach".into(), tokens: vec![0] },
        ];
        let text = write_corpus(&pieces);
        assert_eq!(read_corpus(&text).unwrap(), pieces);
        let vtext = write_vocabulary(&vocab);
        assert!(vtext.contains("\t4.7._/0\t2\n"));
        assert_eq!(read_vocabulary(&vtext).unwrap(), vocab);
    }

    #[test]
    fn validation_catches_out_of_range_ids() {
        let corpus = EncodedCorpus {
            pieces: vec![EncodedPiece { composition: "a".into(), dataset: "d".into(), tokens: vec![0, 5] }],
            vocabulary: build_vocabulary([&["4.7._/0".parse::<ChordType>().unwrap()][..]]),
        };
        assert!(matches!(corpus.validate(), Err(CorpusFileError::IdOutOfRange { id: 5, .. })));
    }

    #[test]
    fn rejects_shuffled_vocabulary() {
        let text = format!("{VOCABULARY_HEADER}\n0\t4.7._/0\t1\n1\t3.8._/0\t1\n");
        assert!(read_vocabulary(&text).is_err());
    }
}
