use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{NoteEvent, QuarterTime, Slice};

/// Full expansion: one slice per distinct onset, holding every pitch that
/// sounds at that instant (sustained notes are repeated in each slice they
/// overlap). Identical MIDI numbers collapse.
pub fn full_expand(events: &[NoteEvent]) -> Vec<Slice> {
    let mut order: Vec<&NoteEvent> = events.iter().collect();
    order.sort_by_key(|e| e.onset);

    // min-heap on release time; the multiset of sounding pitches alongside
    let mut releases: BinaryHeap<Reverse<(QuarterTime, u8)>> = BinaryHeap::new();
    let mut sounding: BTreeMap<u8, usize> = BTreeMap::new();
    let mut slices = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let t = order[i].onset;
        while let Some(Reverse((end, pitch))) = releases.peek().copied() {
            if end > t {
                break;
            }
            releases.pop();
            if let Some(n) = sounding.get_mut(&pitch) {
                *n -= 1;
                if *n == 0 {
                    sounding.remove(&pitch);
                }
            }
        }
        while i < order.len() && order[i].onset == t {
            let e = order[i];
            if e.duration > QuarterTime::from_integer(0) {
                releases.push(Reverse((e.end(), e.pitch)));
                *sounding.entry(e.pitch).or_default() += 1;
            }
            i += 1;
        }
        let pitches: BTreeSet<u8> = sounding.keys().copied().collect();
        if let Some(slice) = Slice::new(t, pitches) {
            slices.push(slice);
        }
    }
    slices
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn note(onset: i64, dur: i64, pitch: u8) -> NoteEvent {
        NoteEvent { onset: Ratio::from_integer(onset), duration: Ratio::from_integer(dur), pitch, track: 0 }
    }

    #[test]
    fn sustained_note_repeats() {
        let slices = full_expand(&[note(0, 2, 60), note(1, 1, 64)]);
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0].pitches().iter().copied().collect::<Vec<_>>(), vec![60]);
        assert_eq!(slices[1].pitches().iter().copied().collect::<Vec<_>>(), vec![60, 64]);
        assert_eq!(slices[1].bass(), 60);
    }

    #[test]
    fn release_at_onset_is_excluded() {
        let slices = full_expand(&[note(0, 1, 60), note(1, 1, 62)]);
        assert_eq!(slices[1].pitches().iter().copied().collect::<Vec<_>>(), vec![62]);
    }

    #[test]
    fn unison_doublings_collapse() {
        let slices = full_expand(&[note(0, 1, 60), NoteEvent { track: 3, ..note(0, 2, 60) }, note(1, 1, 67)]);
        assert_eq!(slices[0].pitches().len(), 1);
        assert_eq!(slices[1].pitches().iter().copied().collect::<Vec<_>>(), vec![60, 67]);
    }

    #[test]
    fn empty_input() {
        assert!(full_expand(&[]).is_empty());
    }
}
