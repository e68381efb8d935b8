use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;

use chordseq::encoder::{encode_stream, OverflowPolicy};
use chordseq::ingest::{full_expand, parse_midi, MidiOptions, NoteEvent, SliceStream};
use chordseq::keyscape::{builtin_profile, KeyFinder, Mode, WindowConfig, DEFAULT_PROFILE};
use chordseq_testkit::expand as reference;
use midly::num::{u15, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};
use num_rational::Ratio;
use proptest::prelude::*;

const FRAGMENT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/aus_meines_herzens_grunde_mm1-2.mid");

/// Note list extracted with midly: FIFO matching per (channel, key),
/// percussion dropped, zero-length notes dropped, unterminated notes closed
/// at the last event of their track.
fn midly_notes(bytes: &[u8]) -> BTreeSet<(Ratio<i64>, Ratio<i64>, u8, u16)> {
    let smf = Smf::parse(bytes).unwrap();
    let Timing::Metrical(div) = smf.header.timing else { panic!("metrical only") };
    let q = |t: u64| Ratio::new(t as i64, i64::from(div.as_int()));
    let mut out = BTreeSet::new();
    for (ti, track) in smf.tracks.iter().enumerate() {
        let mut tick = 0u64;
        let mut open: HashMap<(u8, u8), VecDeque<u64>> = HashMap::new();
        for ev in track {
            tick += u64::from(ev.delta.as_int());
            let TrackEventKind::Midi { channel, message } = ev.kind else { continue };
            if channel.as_int() == 9 {
                continue;
            }
            let (key, on) = match message {
                MidiMessage::NoteOn { key, vel } => (key.as_int(), vel.as_int() > 0),
                MidiMessage::NoteOff { key, .. } => (key.as_int(), false),
                _ => continue,
            };
            let queue = open.entry((channel.as_int(), key)).or_default();
            if on {
                queue.push_back(tick);
            } else if let Some(start) = queue.pop_front() {
                if tick > start {
                    out.insert((q(start), q(tick - start), key, ti as u16));
                }
            }
        }
        for ((_, key), starts) in open {
            for start in starts.into_iter().filter(|&s| tick > s) {
                out.insert((q(start), q(tick - start), key, ti as u16));
            }
        }
    }
    out
}

fn ours(bytes: &[u8]) -> BTreeSet<(Ratio<i64>, Ratio<i64>, u8, u16)> {
    parse_midi(bytes, MidiOptions::default())
        .unwrap()
        .events
        .into_iter()
        .map(|n| (n.onset, n.duration, n.pitch, n.track))
        .collect()
}

fn ev(delta: u32, kind: TrackEventKind<'static>) -> TrackEvent<'static> {
    TrackEvent { delta: u28::from(delta), kind }
}

fn note(channel: u8, key: u8, vel: u8) -> TrackEventKind<'static> {
    let message = if vel == 255 {
        MidiMessage::NoteOff { key: u7::from(key), vel: u7::from(64) }
    } else {
        MidiMessage::NoteOn { key: u7::from(key), vel: u7::from(vel) }
    };
    TrackEventKind::Midi { channel: u4::from(channel), message }
}

const OFF: u8 = 255;

fn three_voice_file() -> Vec<u8> {
    let mut smf = Smf::new(Header::new(Format::Parallel, Timing::Metrical(u15::from(96))));
    let eot = || TrackEventKind::Meta(MetaMessage::EndOfTrack);
    smf.tracks.push(vec![ev(0, TrackEventKind::Meta(MetaMessage::Tempo(500_000.into()))), ev(0, eot())]);
    // soprano: note-on velocity 0 as release, a same-pitch overlap
    smf.tracks.push(vec![
        ev(0, note(0, 72, 80)),
        ev(96, note(0, 72, 0)),
        ev(0, note(0, 74, 80)),
        ev(48, note(0, 74, 80)),
        ev(48, note(0, 74, 0)),
        ev(48, note(0, 74, 0)),
        ev(0, note(0, 76, 90)),
        ev(144, note(0, 76, OFF)),
        ev(0, eot()),
    ]);
    // alto with a percussion hit and a program change
    smf.tracks.push(vec![
        ev(0, TrackEventKind::Midi { channel: u4::from(1), message: MidiMessage::ProgramChange { program: u7::from(19) } }),
        ev(0, note(1, 67, 70)),
        ev(0, note(9, 38, 100)),
        ev(72, note(9, 38, 0)),
        ev(72, note(1, 67, OFF)),
        ev(0, note(1, 65, 70)),
        ev(32, note(1, 65, OFF)),
        ev(0, note(1, 64, 70)),
        ev(208, note(1, 64, OFF)),
        ev(0, eot()),
    ]);
    // bass: a zero-length note and an unterminated one
    smf.tracks.push(vec![
        ev(0, note(2, 48, 70)),
        ev(192, note(2, 48, OFF)),
        ev(0, note(2, 43, 70)),
        ev(0, note(2, 43, OFF)),
        ev(0, note(2, 43, 70)),
        ev(144, TrackEventKind::Meta(MetaMessage::EndOfTrack)),
    ]);
    let mut bytes = Vec::new();
    smf.write_std(&mut bytes).unwrap();
    bytes
}

#[test]
fn three_voice_file_matches_midly() {
    let bytes = three_voice_file();
    let expected = midly_notes(&bytes);
    assert_eq!(ours(&bytes), expected);
    // 2 soprano + 1 overlapping soprano + 3 alto + 2 bass, drum and zero-length note gone
    assert_eq!(expected.len(), 9);
    let parsed = parse_midi(&bytes, MidiOptions::default()).unwrap();
    assert_eq!(parsed.format, 1);
    assert_eq!(parsed.warnings.len(), 2, "{:?}", parsed.warnings);
}

#[test]
fn chorale_files_match_midly() {
    let mut files = vec![std::path::PathBuf::from(FRAGMENT)];
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/bach-chorales");
    if let Ok(dir) = std::fs::read_dir(&corpus) {
        let mut more: Vec<_> = dir.filter_map(Result::ok).map(|e| e.path()).collect();
        more.sort();
        files.extend(more.into_iter().take(25));
    }
    for f in files {
        let bytes = std::fs::read(&f).unwrap();
        assert_eq!(ours(&bytes), midly_notes(&bytes), "{}", f.display());
    }
}

#[test]
fn chorale_fragment_slices_keys_and_first_chord() {
    let bytes = std::fs::read(FRAGMENT).unwrap();
    let parsed = parse_midi(&bytes, MidiOptions::default()).unwrap();
    let stream = SliceStream::from_notes("bwv269", "bach", parsed.events);
    assert_eq!(stream.slices.len(), 9);
    let finder = KeyFinder::new(builtin_profile(DEFAULT_PROFILE).unwrap(), WindowConfig::default());
    for k in finder.trace(&stream) {
        assert_eq!((k.key.tonic, k.key.mode), (7, Mode::Major), "at {}", k.onset);
    }
    let types = encode_stream(&stream, &finder, OverflowPolicy::Smallest);
    assert_eq!(types[0].to_string(), "4.7._/0");
}

fn events() -> impl Strategy<Value = Vec<NoteEvent>> {
    prop::collection::vec((0i64..24, 1i64..4, 1i64..12, 36u8..84), 0..=20).prop_map(|v| {
        v.into_iter()
            .map(|(on, den, dur, pitch)| NoteEvent {
                onset: Ratio::new(on, 2),
                duration: Ratio::new(dur, den),
                pitch,
                track: 0,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn full_expand_matches_interval_membership(mut notes in events()) {
        notes.sort();
        let got: Vec<(Ratio<i64>, BTreeSet<u8>)> =
            full_expand(&notes).into_iter().map(|s| (s.onset(), s.pitches().clone())).collect();
        let raw: Vec<reference::Note> = notes.iter().map(|n| (n.onset, n.duration, n.pitch)).collect();
        prop_assert_eq!(got, reference::slices(&raw));
    }
}
