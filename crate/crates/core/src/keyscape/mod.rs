//! Local key estimation by correlating a windowed pitch-class distribution
//! against major and minor key profiles in all twelve transpositions.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::ingest::{NoteEvent, QuarterTime, SliceStream};

pub const PITCH_CLASSES: usize = 12;

/// Weight per pitch class, index 0 = C.
pub type PcVector = [f64; PITCH_CLASSES];

const BUILTIN_PROFILES: &str = include_str!("../../data/key_profiles.txt");

#[derive(Debug, Error, PartialEq)]
pub enum KeyError {
    #[error("correlation is undefined for a zero-variance vector")]
    UndefinedCorrelation,
    #[error("profile {name:?}: {message}")]
    BadProfile { name: String, message: String },
    #[error("profile file line {line}: {message}")]
    ProfileSyntax { line: usize, message: String },
    #[error("no key profile named {0:?}")]
    UnknownProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Major,
    Minor,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyProfile {
    name: String,
    major: PcVector,
    minor: PcVector,
}

impl KeyProfile {
    pub fn new(name: impl Into<String>, major: PcVector, minor: PcVector) -> Result<Self, KeyError> {
        let name = name.into();
        for (mode, w) in [(Mode::Major, &major), (Mode::Minor, &minor)] {
            if w.iter().any(|x| !x.is_finite()) || variance(w) == 0.0 {
                return Err(KeyError::BadProfile {
                    name,
                    message: format!("{mode} weights must be finite with nonzero variance"),
                });
            }
        }
        Ok(Self { name, major, minor })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weights(&self, mode: Mode) -> &PcVector {
        match mode {
            Mode::Major => &self.major,
            Mode::Minor => &self.minor,
        }
    }

    /// Profile for `mode` transposed so that its tonic falls on `tonic`.
    pub fn rotated(&self, tonic: u8, mode: Mode) -> PcVector {
        let w = self.weights(mode);
        std::array::from_fn(|pc| w[(pc + PITCH_CLASSES - tonic as usize) % PITCH_CLASSES])
    }
}

/// Parses profile records: a name followed by 12 major and 12 minor weights,
/// whitespace separated. `#` starts a comment.
pub fn parse_profiles(text: &str) -> Result<Vec<KeyProfile>, KeyError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let name = fields.next().expect("line is nonempty");
        let weights = fields
            .map(f64::from_str)
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| KeyError::ProfileSyntax { line: i + 1, message: e.to_string() })?;
        if weights.len() != 2 * PITCH_CLASSES {
            return Err(KeyError::ProfileSyntax {
                line: i + 1,
                message: format!("expected 24 weights, found {}", weights.len()),
            });
        }
        let major = std::array::from_fn(|k| weights[k]);
        let minor = std::array::from_fn(|k| weights[PITCH_CLASSES + k]);
        out.push(KeyProfile::new(name, major, minor)?);
    }
    Ok(out)
}

/// The shipped profiles: `albrecht-shanahan` (default) and `krumhansl-kessler`.
pub fn builtin_profiles() -> Vec<KeyProfile> {
    parse_profiles(BUILTIN_PROFILES).expect("bundled profile file is valid")
}

pub fn builtin_profile(name: &str) -> Result<KeyProfile, KeyError> {
    builtin_profiles()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| KeyError::UnknownProfile(name.to_string()))
}

pub const DEFAULT_PROFILE: &str = "albrecht-shanahan";

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
}

/// Pearson product-moment correlation.
pub fn pearson(a: &PcVector, b: &PcVector) -> Result<f64, KeyError> {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(KeyError::UndefinedCorrelation);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyEstimate {
    pub tonic: u8,
    pub mode: Mode,
    pub score: f64,
}

/// Correlation of `histogram` with every key, indexed `[tonic][mode]`
/// (mode 0 = major, 1 = minor).
pub fn key_correlations(histogram: &PcVector, profile: &KeyProfile) -> Result<[[f64; 2]; PITCH_CLASSES], KeyError> {
    let mut out = [[0.0; 2]; PITCH_CLASSES];
    for tonic in 0..PITCH_CLASSES as u8 {
        for (m, mode) in [Mode::Major, Mode::Minor].into_iter().enumerate() {
            out[tonic as usize][m] = pearson(histogram, &profile.rotated(tonic, mode))?;
        }
    }
    Ok(out)
}

/// Best of the 24 keys; ties go to the lower tonic, then major.
/// `None` if the histogram has zero variance.
pub fn estimate_key(histogram: &PcVector, profile: &KeyProfile) -> Option<KeyEstimate> {
    let scores = key_correlations(histogram, profile).ok()?;
    let mut best: Option<KeyEstimate> = None;
    for (tonic, pair) in scores.iter().enumerate() {
        for (mode, &score) in [Mode::Major, Mode::Minor].into_iter().zip(pair) {
            if best.is_none_or(|b| score > b.score) {
                best = Some(KeyEstimate { tonic: tonic as u8, mode, score });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Each note contributes the length of its overlap with the window.
    #[default]
    Duration,
    /// Each overlapping note contributes 1.
    Count,
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "duration" => Ok(Self::Duration),
            "count" => Ok(Self::Count),
            other => Err(format!("unknown weighting {other:?} (expected duration or count)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    /// Window length in quarter notes, centred on the onset.
    pub width: QuarterTime,
    pub weighting: Weighting,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { width: Ratio::from_integer(16), weighting: Weighting::Duration }
    }
}

/// Pitch-class histogram of the notes overlapping `[center - width/2, center + width/2)`.
///
/// `notes` must be sorted by onset. Notes outside the piece do not exist, so
/// windows near the edges are truncated implicitly.
pub fn window_histogram(notes: &[NoteEvent], center: QuarterTime, config: WindowConfig) -> PcVector {
    let half = config.width / 2;
    let (lo, hi) = (center - half, center + half);
    let longest = notes.iter().map(|n| n.duration).max().unwrap_or_default();
    let first = notes.partition_point(|n| n.onset + longest <= lo);
    let last = notes.partition_point(|n| n.onset < hi);
    let mut hist = [0.0; PITCH_CLASSES];
    for n in &notes[first..last.max(first)] {
        let overlap = n.end().min(hi) - n.onset.max(lo);
        if overlap > Ratio::from_integer(0) {
            hist[(n.pitch % 12) as usize] += match config.weighting {
                Weighting::Duration => overlap.to_f64().expect("finite rational"),
                Weighting::Count => 1.0,
            };
        }
    }
    hist
}

/// Pitch-class histogram over the whole piece.
pub fn piece_histogram(notes: &[NoteEvent], weighting: Weighting) -> PcVector {
    let mut hist = [0.0; PITCH_CLASSES];
    for n in notes {
        hist[(n.pitch % 12) as usize] += match weighting {
            Weighting::Duration => n.duration.to_f64().expect("finite rational"),
            Weighting::Count => 1.0,
        };
    }
    hist
}

/// Where an onset's key came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySource {
    Window,
    /// Window was undefined; the previous onset's key was reused.
    Previous,
    /// Window at the first onset was undefined; the whole piece was used.
    WholePiece,
    /// Nothing was defined; C major with score 0.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyTraceEntry {
    pub onset: QuarterTime,
    pub key: KeyEstimate,
    pub source: KeySource,
}

#[derive(Debug, Clone)]
pub struct KeyFinder {
    pub profile: KeyProfile,
    pub window: WindowConfig,
}

impl KeyFinder {
    pub fn new(profile: KeyProfile, window: WindowConfig) -> Self {
        Self { profile, window }
    }

    /// One key per slice onset, recomputed at every onset.
    pub fn trace(&self, stream: &SliceStream) -> Vec<KeyTraceEntry> {
        let mut out: Vec<KeyTraceEntry> = Vec::with_capacity(stream.slices.len());
        for slice in &stream.slices {
            let hist = window_histogram(&stream.notes, slice.onset(), self.window);
            let entry = match (estimate_key(&hist, &self.profile), out.last()) {
                (Some(key), _) => KeyTraceEntry { onset: slice.onset(), key, source: KeySource::Window },
                (None, Some(prev)) => KeyTraceEntry { onset: slice.onset(), key: prev.key, source: KeySource::Previous },
                (None, None) => {
                    let whole = piece_histogram(&stream.notes, self.window.weighting);
                    match estimate_key(&whole, &self.profile) {
                        Some(key) => KeyTraceEntry { onset: slice.onset(), key, source: KeySource::WholePiece },
                        None => KeyTraceEntry {
                            onset: slice.onset(),
                            key: KeyEstimate { tonic: 0, mode: Mode::Major, score: 0.0 },
                            source: KeySource::Fallback,
                        },
                    }
                }
            };
            out.push(entry);
        }
        out
    }
}

/// CSV rendering of a key trace: `onset,tonic,mode,r`.
pub fn key_trace_csv(trace: &[KeyTraceEntry]) -> String {
    let mut out = String::from("onset,tonic,mode,r\n");
    for e in trace {
        out.push_str(&format!("{},{},{},{:.6}\n", e.onset, e.key.tonic, e.key.mode, e.key.score));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn note(onset: i64, dur: i64, pitch: u8) -> NoteEvent {
        NoteEvent { onset: Ratio::from_integer(onset), duration: Ratio::from_integer(dur), pitch, track: 0 }
    }

    #[test]
    fn builtin_profiles_load() {
        let names: Vec<String> = builtin_profiles().iter().map(|p| p.name().to_string()).collect();
        assert_eq!(names, ["albrecht-shanahan", "krumhansl-kessler"]);
        assert_eq!(builtin_profile("krumhansl-kessler").unwrap().weights(Mode::Major)[7], 5.19);
        assert!(builtin_profile("nope").is_err());
    }

    #[test]
    fn flat_profile_rejected() {
        assert!(KeyProfile::new("flat", [1.0; 12], [0.0; 12]).is_err());
        assert!(parse_profiles("x 1 2 3").is_err());
    }

    #[test]
    fn pearson_extremes() {
        let v: PcVector = std::array::from_fn(|i| (i * i) as f64 - 3.0);
        let neg: PcVector = std::array::from_fn(|i| -v[i]);
        assert!((pearson(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&v, &[2.0; 12]), Err(KeyError::UndefinedCorrelation));
    }

    #[test]
    fn whole_window_note() {
        let notes = [note(-20, 40, 60)];
        let h = window_histogram(&notes, Ratio::from_integer(0), WindowConfig::default());
        assert_eq!(h[0], 16.0);
        assert!(h[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn partial_overlap_counts_overlap_only() {
        // window [-8, 8); note spans [4, 12)
        let notes = [note(4, 8, 62)];
        let h = window_histogram(&notes, Ratio::from_integer(0), WindowConfig::default());
        assert_eq!(h[2], 4.0);
        let counted = window_histogram(&notes, Ratio::from_integer(0), WindowConfig { weighting: Weighting::Count, ..Default::default() });
        assert_eq!(counted[2], 1.0);
        // a note ending exactly at the window start does not overlap
        assert_eq!(window_histogram(&[note(-10, 2, 60)], Ratio::from_integer(0), WindowConfig::default())[0], 0.0);
    }

    #[test]
    fn ties_prefer_low_tonic_then_major() {
        // A profile symmetric under transposition by 6 semitones, so tonic k and k+6 tie.
        let w: PcVector = std::array::from_fn(|i| if i % 6 == 0 { 2.0 } else { 1.0 });
        let p = KeyProfile::new("sym", w, w).unwrap();
        let mut h = [0.0; 12];
        h[3] = 1.0;
        h[9] = 1.0;
        let k = estimate_key(&h, &p).unwrap();
        assert_eq!((k.tonic, k.mode), (3, Mode::Major));
    }

    #[test]
    fn single_pitch_class_window() {
        let p = builtin_profile(DEFAULT_PROFILE).unwrap();
        for pc in 0..12u8 {
            let mut h = [0.0; 12];
            h[pc as usize] = 3.0;
            let k = estimate_key(&h, &p).unwrap();
            let rotated = p.rotated(k.tonic, k.mode);
            let max = rotated.iter().cloned().fold(f64::MIN, f64::max);
            // the lone pitch class sits on the winning key's heaviest degree
            assert_eq!(rotated[pc as usize], max);
        }
    }

    #[test]
    fn trace_falls_back_to_previous_key() {
        // Second onset's window holds all twelve pitch classes equally.
        let mut notes = vec![note(0, 1, 60), note(0, 1, 64), note(0, 1, 67)];
        notes.extend((0..12).map(|pc| note(100, 1, 60 + pc)));
        let stream = SliceStream::from_notes("x", "d", notes);
        let finder = KeyFinder::new(builtin_profile(DEFAULT_PROFILE).unwrap(), WindowConfig::default());
        let trace = finder.trace(&stream);
        assert_eq!(trace[0].source, KeySource::Window);
        assert_eq!((trace[0].key.tonic, trace[0].key.mode), (0, Mode::Major));
        assert_eq!(trace[1].source, KeySource::Previous);
        assert_eq!(trace[1].key, trace[0].key);
    }

    #[test]
    fn trace_first_onset_uses_whole_piece() {
        let mut notes: Vec<NoteEvent> = (0..12).map(|pc| note(0, 1, 60 + pc)).collect();
        notes.extend([note(50, 4, 62), note(50, 4, 66), note(50, 4, 69)]);
        let stream = SliceStream::from_notes("x", "d", notes);
        let finder = KeyFinder::new(builtin_profile(DEFAULT_PROFILE).unwrap(), WindowConfig::default());
        let trace = finder.trace(&stream);
        assert_eq!(trace[0].source, KeySource::WholePiece);
        assert_eq!(trace[1].source, KeySource::Window);
        assert_eq!(trace[1].key.tonic, 2);
        assert!(key_trace_csv(&trace).starts_with("onset,tonic,mode,r\n0,"));
    }
}
