//! Reference implementations written straight from the definitions, with no
//! shared code or data structures from `chordseq`. Slow on purpose.

pub mod expand;
pub mod key;
pub mod ppm;
pub mod stats;
