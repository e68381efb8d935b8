//! Chord-onset sequence modelling for symbolic music corpora.
//!
//! The pipeline runs [`ingest`] (MIDI to onset slices), [`keyscape`] (local
//! key per onset), [`encoder`] (slices to `(S, I)` chord types), [`ppm`]
//! (variable-order context models) and [`evalkit`] (cross-entropy, folds,
//! bootstrap intervals and stepwise regression).

pub mod ingest;
pub mod encoder;
pub mod keyscape;
pub mod ppm;
pub mod evalkit;
