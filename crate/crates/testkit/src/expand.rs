use std::collections::BTreeSet;

use num_rational::Ratio;

/// `(onset, duration, pitch)` in quarter notes.
pub type Note = (Ratio<i64>, Ratio<i64>, u8);

/// One slice per distinct onset holding every note whose interval
/// `[onset, onset + duration)` contains that onset.
pub fn slices(notes: &[Note]) -> Vec<(Ratio<i64>, BTreeSet<u8>)> {
    let onsets: BTreeSet<Ratio<i64>> = notes.iter().map(|n| n.0).collect();
    onsets
        .into_iter()
        .map(|t| {
            let sounding = notes.iter().filter(|&&(on, dur, _)| on <= t && t < on + dur).map(|n| n.2).collect();
            (t, sounding)
        })
        .collect()
}
