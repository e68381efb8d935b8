//! Standard MIDI File reader (formats 0 and 1).
//!
//! Only note timing survives: tempo, dynamics and controller data are read
//! past and discarded.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use super::{ticks_to_quarters, NoteEvent};

const PERCUSSION_CHANNEL: u8 = 9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MidiError {
    #[error("byte {offset}: expected chunk id {expected:?}")]
    BadChunkId { offset: usize, expected: &'static str },
    #[error("byte {offset}: unexpected end of data")]
    Truncated { offset: usize },
    #[error("byte {offset}: header length {length} is shorter than 6")]
    BadHeaderLength { offset: usize, length: u32 },
    #[error("byte {offset}: unsupported SMF format {format}")]
    UnsupportedFormat { offset: usize, format: u16 },
    #[error("byte {offset}: SMPTE time division is not supported")]
    SmpteDivision { offset: usize },
    #[error("byte {offset}: division of zero ticks per quarter note")]
    ZeroDivision { offset: usize },
    #[error("byte {offset}: running status without a preceding status byte")]
    MissingStatus { offset: usize },
    #[error("byte {offset}: variable-length quantity longer than 4 bytes")]
    BadVarLen { offset: usize },
    #[error("byte {offset}: invalid status byte {status:#04x}")]
    BadStatus { offset: usize, status: u8 },
}

/// Non-fatal conditions encountered while reading a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// A note-on had no matching note-off and was closed at the end of its track.
    UnterminatedNote { track: u16, pitch: u8, onset_tick: u64 },
    /// Note-off at the same tick as its note-on; the note was dropped.
    ZeroDuration { track: u16, pitch: u8, tick: u64 },
    /// Note-off with no sounding note to close.
    OrphanNoteOff { track: u16, pitch: u8, tick: u64 },
    /// The header announced a different number of tracks than were present.
    TrackCountMismatch { declared: u16, found: u16 },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MidiOptions {
    /// Keep notes on channel 10 (General MIDI percussion).
    pub include_percussion: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedMidi {
    pub format: u16,
    pub division: u16,
    pub events: Vec<NoteEvent>,
    pub warnings: Vec<ParseWarning>,
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        let b = *self.data.get(self.pos).ok_or(MidiError::Truncated { offset: self.pos })?;
        self.pos += 1;
        Ok(b)
    }

    fn peek(&self) -> Result<u8, MidiError> {
        self.data.get(self.pos).copied().ok_or(MidiError::Truncated { offset: self.pos })
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        if self.remaining() < n {
            return Err(MidiError::Truncated { offset: self.data.len() });
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, MidiError> {
        let b = self.bytes(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn varlen(&mut self) -> Result<u32, MidiError> {
        let start = self.pos;
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(MidiError::BadVarLen { offset: start })
    }
}

/// Parses an SMF byte buffer into note events, sorted by onset then pitch.
///
/// Overlapping note-ons of the same pitch on the same channel are matched to
/// note-offs first-in first-out.
pub fn parse_midi(bytes: &[u8], options: MidiOptions) -> Result<ParsedMidi, MidiError> {
    let mut r = Reader::new(bytes);
    let id = r.bytes(4).map_err(|_| MidiError::BadChunkId { offset: 0, expected: "MThd" })?;
    if id != b"MThd" {
        return Err(MidiError::BadChunkId { offset: 0, expected: "MThd" });
    }
    let len_offset = r.pos;
    let header_len = r.u32()?;
    if header_len < 6 {
        return Err(MidiError::BadHeaderLength { offset: len_offset, length: header_len });
    }
    let header_start = r.pos;
    let format = r.u16()?;
    if format > 1 {
        return Err(MidiError::UnsupportedFormat { offset: header_start, format });
    }
    let ntracks = r.u16()?;
    let div_offset = r.pos;
    let division = r.u16()?;
    if division & 0x8000 != 0 {
        return Err(MidiError::SmpteDivision { offset: div_offset });
    }
    if division == 0 {
        return Err(MidiError::ZeroDivision { offset: div_offset });
    }
    r.bytes(header_len as usize - 6)?;

    let mut out = ParsedMidi { format, division, ..Default::default() };
    let mut track_index: u16 = 0;
    while r.remaining() > 0 {
        let chunk_offset = r.pos;
        if r.remaining() < 8 {
            return Err(MidiError::Truncated { offset: bytes.len() });
        }
        let chunk_id = r.bytes(4)?;
        let chunk_len = r.u32()? as usize;
        if r.remaining() < chunk_len {
            return Err(MidiError::Truncated { offset: bytes.len() });
        }
        if chunk_id != b"MTrk" {
            // Alien chunks are allowed by the standard and must be skipped.
            log::debug!("skipping unknown chunk at byte {chunk_offset}");
            r.pos += chunk_len;
            continue;
        }
        let body_start = r.pos;
        read_track(bytes, body_start, chunk_len, track_index, division, options, &mut out)?;
        r.pos = body_start + chunk_len;
        track_index += 1;
    }
    if track_index != ntracks {
        out.warnings.push(ParseWarning::TrackCountMismatch { declared: ntracks, found: track_index });
    }
    out.events.sort();
    Ok(out)
}

fn read_track(
    bytes: &[u8],
    start: usize,
    len: usize,
    track: u16,
    division: u16,
    options: MidiOptions,
    out: &mut ParsedMidi,
) -> Result<(), MidiError> {
    let mut r = Reader::new(&bytes[..start + len]);
    r.pos = start;
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    // (channel, pitch) -> onset ticks of sounding notes, oldest first
    let mut open: HashMap<(u8, u8), VecDeque<u64>> = HashMap::new();

    let close = |open: &mut HashMap<(u8, u8), VecDeque<u64>>, out: &mut ParsedMidi, ch: u8, pitch: u8, tick: u64| {
        match open.get_mut(&(ch, pitch)).and_then(VecDeque::pop_front) {
            Some(on) if on == tick => out.warnings.push(ParseWarning::ZeroDuration { track, pitch, tick }),
            Some(on) => out.events.push(NoteEvent {
                onset: ticks_to_quarters(on, division),
                duration: ticks_to_quarters(tick - on, division),
                pitch,
                track,
            }),
            None => out.warnings.push(ParseWarning::OrphanNoteOff { track, pitch, tick }),
        }
    };

    while r.remaining() > 0 {
        tick += u64::from(r.varlen()?);
        let status_offset = r.pos;
        let mut status = r.peek()?;
        if status & 0x80 != 0 {
            r.pos += 1;
        } else {
            status = running.ok_or(MidiError::MissingStatus { offset: status_offset })?;
        }
        match status {
            0xff => {
                let kind = r.u8()?;
                let n = r.varlen()? as usize;
                r.bytes(n)?;
                if kind == 0x2f {
                    break;
                }
            }
            0xf0 | 0xf7 => {
                let n = r.varlen()? as usize;
                r.bytes(n)?;
                running = None;
            }
            0x80..=0xef => {
                running = Some(status);
                let ch = status & 0x0f;
                let kind = status & 0xf0;
                let a = r.u8()?;
                let b = if matches!(kind, 0xc0 | 0xd0) { 0 } else { r.u8()? };
                if ch == PERCUSSION_CHANNEL && !options.include_percussion {
                    continue;
                }
                match (kind, b) {
                    (0x90, v) if v > 0 => open.entry((ch, a)).or_default().push_back(tick),
                    (0x80, _) | (0x90, _) => close(&mut open, out, ch, a, tick),
                    _ => {}
                }
            }
            other => return Err(MidiError::BadStatus { offset: status_offset, status: other }),
        }
    }

    let mut unterminated: Vec<(u8, u8, u64)> = open
        .into_iter()
        .flat_map(|((ch, pitch), ons)| ons.into_iter().map(move |on| (ch, pitch, on)))
        .collect();
    unterminated.sort_unstable();
    for (_, pitch, on) in unterminated {
        out.warnings.push(ParseWarning::UnterminatedNote { track, pitch, onset_tick: on });
        if tick > on {
            out.events.push(NoteEvent {
                onset: ticks_to_quarters(on, division),
                duration: ticks_to_quarters(tick - on, division),
                pitch,
                track,
            });
        } else {
            out.warnings.push(ParseWarning::ZeroDuration { track, pitch, tick });
        }
    }
    Ok(())
}
