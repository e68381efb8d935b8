//! Slice-stream interchange files.
//!
//! Tab-separated, one record per line, in this fixed order:
//!
//! ```text
//! #chordseq slice-stream v1
//! D <composition> <dataset>
//! S <composition> <onset num> <onset den> <pitch,pitch,...>     one per slice, ascending onset
//! N <composition> <onset num> <onset den> <dur num> <dur den> <pitch> <track>
//! ```
//!
//! `N` records carry the note events the key window integrates over and
//! follow all `S` records, sorted by (onset, duration, pitch, track).
//! Fractions are written in lowest terms with a positive denominator.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_rational::Ratio;
use thiserror::Error;

use super::{NoteEvent, QuarterTime, Slice, SliceStream};

pub const HEADER: &str = "#chordseq slice-stream v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InterchangeError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("identifier {0:?} contains a tab or newline")]
    BadIdentifier(String),
}

fn check_id(id: &str) -> Result<(), InterchangeError> {
    if id.is_empty() || id.contains(['\t', '\n', '\r']) {
        Err(InterchangeError::BadIdentifier(id.to_string()))
    } else {
        Ok(())
    }
}

pub fn write_slice_stream(stream: &SliceStream) -> Result<String, InterchangeError> {
    check_id(&stream.composition)?;
    check_id(&stream.dataset)?;
    let id = &stream.composition;
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "D\t{id}\t{}", stream.dataset);
    for s in &stream.slices {
        let pitches: Vec<String> = s.pitches().iter().map(u8::to_string).collect();
        let _ = writeln!(out, "S\t{id}\t{}\t{}\t{}", s.onset().numer(), s.onset().denom(), pitches.join(","));
    }
    let mut notes: Vec<&NoteEvent> = stream.notes.iter().collect();
    notes.sort_by_key(|a| (a.onset, a.duration, a.pitch, a.track));
    for n in notes {
        let _ = writeln!(
            out,
            "N\t{id}\t{}\t{}\t{}\t{}\t{}\t{}",
            n.onset.numer(),
            n.onset.denom(),
            n.duration.numer(),
            n.duration.denom(),
            n.pitch,
            n.track
        );
    }
    Ok(out)
}

pub fn read_slice_stream(text: &str) -> Result<SliceStream, InterchangeError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, HEADER)) => {}
        _ => return Err(syntax(1, format!("expected header {HEADER:?}"))),
    }
    let (line, d) = lines.next().ok_or_else(|| syntax(2, "missing D record"))?;
    let d: Vec<&str> = d.split('\t').collect();
    if d.len() != 3 || d[0] != "D" {
        return Err(syntax(line, "expected D record"));
    }
    let mut stream = SliceStream {
        composition: d[1].to_string(),
        dataset: d[2].to_string(),
        slices: Vec::new(),
        notes: Vec::new(),
    };
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() < 2 || fields[1] != stream.composition {
            return Err(syntax(line, "record does not name this composition"));
        }
        match fields[0] {
            "S" if fields.len() == 5 => {
                if !stream.notes.is_empty() {
                    return Err(syntax(line, "S record after N records"));
                }
                let onset = fraction(line, fields[2], fields[3])?;
                if stream.slices.last().is_some_and(|s: &Slice| s.onset() >= onset) {
                    return Err(syntax(line, "slice onsets must strictly increase"));
                }
                let pitches = fields[4]
                    .split(',')
                    .map(|p| int::<u8>(line, p))
                    .collect::<Result<BTreeSet<u8>, _>>()?;
                let slice = Slice::new(onset, pitches).ok_or_else(|| syntax(line, "empty slice"))?;
                stream.slices.push(slice);
            }
            "N" if fields.len() == 8 => {
                let onset = fraction(line, fields[2], fields[3])?;
                let duration = fraction(line, fields[4], fields[5])?;
                if duration <= Ratio::from_integer(0) {
                    return Err(syntax(line, "note duration must be positive"));
                }
                stream.notes.push(NoteEvent {
                    onset,
                    duration,
                    pitch: int(line, fields[6])?,
                    track: int(line, fields[7])?,
                });
            }
            _ => return Err(syntax(line, format!("unrecognised record {:?}", fields[0]))),
        }
    }
    stream.notes.sort();
    Ok(stream)
}

fn syntax(line: usize, message: impl Into<String>) -> InterchangeError {
    InterchangeError::Syntax { line, message: message.into() }
}

fn int<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, InterchangeError> {
    s.parse().map_err(|_| syntax(line, format!("bad integer {s:?}")))
}

fn fraction(line: usize, num: &str, den: &str) -> Result<QuarterTime, InterchangeError> {
    let den: i64 = int(line, den)?;
    if den <= 0 {
        return Err(syntax(line, "denominator must be positive"));
    }
    Ok(Ratio::new(int(line, num)?, den))
}
