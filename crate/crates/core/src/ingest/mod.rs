//! Score ingestion: Standard MIDI File parsing, full expansion into onset
//! slices, and the line-oriented slice-stream interchange format.

mod expand;
mod interchange;
mod midi;

use std::collections::BTreeSet;

use num_rational::Ratio;

pub use expand::full_expand;
pub use interchange::{read_slice_stream, write_slice_stream, InterchangeError};
pub use midi::{parse_midi, MidiError, MidiOptions, ParsedMidi, ParseWarning};

/// Score time in quarter notes, held exactly.
pub type QuarterTime = Ratio<i64>;

/// One pitched event from a score.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NoteEvent {
    pub onset: QuarterTime,
    pub duration: QuarterTime,
    pub pitch: u8,
    pub track: u16,
}

impl NoteEvent {
    pub fn end(&self) -> QuarterTime {
        self.onset + self.duration
    }

    /// True if the note is sounding at `t`, i.e. `onset <= t < onset + duration`.
    pub fn sounds_at(&self, t: QuarterTime) -> bool {
        self.onset <= t && t < self.end()
    }
}

/// The set of pitches sounding at one unique onset time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    onset: QuarterTime,
    pitches: BTreeSet<u8>,
}

impl Slice {
    /// Returns `None` if `pitches` is empty.
    pub fn new(onset: QuarterTime, pitches: BTreeSet<u8>) -> Option<Self> {
        if pitches.is_empty() {
            None
        } else {
            Some(Self { onset, pitches })
        }
    }

    pub fn onset(&self) -> QuarterTime {
        self.onset
    }

    pub fn pitches(&self) -> &BTreeSet<u8> {
        &self.pitches
    }

    /// Lowest sounding pitch.
    pub fn bass(&self) -> u8 {
        *self.pitches.iter().next().expect("slice is nonempty")
    }
}

/// A composition after full expansion.
///
/// The note events are kept alongside the slices because the key window
/// integrates sounding durations, which slices alone cannot recover across
/// rests or at the end of the piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceStream {
    pub composition: String,
    pub dataset: String,
    pub slices: Vec<Slice>,
    pub notes: Vec<NoteEvent>,
}

impl SliceStream {
    /// Expands `notes` into slices. Notes are stored sorted.
    pub fn from_notes(composition: impl Into<String>, dataset: impl Into<String>, mut notes: Vec<NoteEvent>) -> Self {
        notes.sort();
        let slices = full_expand(&notes);
        Self {
            composition: composition.into(),
            dataset: dataset.into(),
            slices,
            notes,
        }
    }

    /// Time span covered by the notes: `(first onset, last release)`.
    pub fn span(&self) -> Option<(QuarterTime, QuarterTime)> {
        let start = self.notes.iter().map(|n| n.onset).min()?;
        let end = self.notes.iter().map(NoteEvent::end).max()?;
        Some((start, end))
    }
}

/// Converts MIDI ticks to quarter notes for a file with `division` ticks per quarter.
pub fn ticks_to_quarters(ticks: u64, division: u16) -> QuarterTime {
    Ratio::new(ticks as i64, i64::from(division))
}
