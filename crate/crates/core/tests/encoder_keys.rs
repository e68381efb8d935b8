use std::collections::BTreeSet;
use std::time::Instant;

use chordseq::encoder::{
    encode_slice, enumerate_s_domain, enumerate_type_domain, reduce_intervals, IntervalSet, OverflowPolicy, S_DOMAIN_SIZE,
    TYPE_DOMAIN_SIZE,
};
use chordseq::ingest::{QuarterTime, Slice};
use chordseq::keyscape::{builtin_profile, builtin_profiles, estimate_key, key_correlations, pearson, KeyEstimate, Mode, DEFAULT_PROFILE};
use chordseq_testkit::key as reference;
use proptest::prelude::*;

#[test]
fn domain_equals_reduction_of_all_small_multisets() {
    let started = Instant::now();
    let domain = enumerate_s_domain();
    assert!(started.elapsed().as_secs_f64() < 1.0);
    assert_eq!(domain.len(), 233);
    assert_eq!(S_DOMAIN_SIZE, 233);
    let mut brute = BTreeSet::new();
    brute.insert(reduce_intervals(&[], OverflowPolicy::Smallest));
    for a in 0..12u8 {
        for b in a..12 {
            for c in b..12 {
                for m in [&[a][..], &[a, b], &[a, b, c]] {
                    brute.insert(reduce_intervals(m, OverflowPolicy::Smallest));
                }
            }
        }
    }
    assert_eq!(brute, domain);
    assert_eq!(domain.iter().filter(|s| s.classes().len() == 2).count(), 55);
    assert_eq!(enumerate_type_domain().len(), TYPE_DOMAIN_SIZE);
}

#[test]
fn overflow_stays_inside_the_domain() {
    let domain = enumerate_s_domain();
    for mask in 0u16..4096 {
        let classes: Vec<u8> = (0..12).filter(|b| mask & (1 << b) != 0).collect();
        for policy in [OverflowPolicy::Smallest, OverflowPolicy::MostFrequent] {
            assert!(domain.contains(&reduce_intervals(&classes, policy)));
        }
    }
}

fn key(tonic: u8) -> KeyEstimate {
    KeyEstimate { tonic, mode: Mode::Major, score: 1.0 }
}

fn slice(pitches: &[u8]) -> Slice {
    Slice::new(QuarterTime::from_integer(0), pitches.iter().copied().collect()).unwrap()
}

fn chord() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(24u8..96, 1..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn encoder_invariances(pitches in chord(), tonic in 0u8..12, shift in 1u8..12, seed in any::<u64>()) {
        let base = encode_slice(&slice(&pitches), &key(tonic), OverflowPolicy::Smallest);

        // voice order does not matter
        let mut shuffled = pitches.clone();
        shuffled.sort_by_key(|&p| (p as u64).wrapping_mul(seed | 1).rotate_left(17));
        prop_assert_eq!(encode_slice(&slice(&shuffled), &key(tonic), OverflowPolicy::Smallest), base);

        // whole-slice octave shift, and upper voices moved up octaves
        let up: Vec<u8> = pitches.iter().map(|p| p + 12).collect();
        prop_assert_eq!(encode_slice(&slice(&up), &key(tonic), OverflowPolicy::Smallest), base);
        let bass = *pitches.iter().min().unwrap();
        let spread: Vec<u8> = pitches.iter().enumerate().map(|(i, &p)| if p == bass { p } else { p + 12 * (i as u8 % 3) }).collect();
        prop_assert_eq!(encode_slice(&slice(&spread), &key(tonic), OverflowPolicy::Smallest), base);

        // transposing notes and key together changes nothing; notes alone move I only
        let moved: Vec<u8> = pitches.iter().map(|p| p + shift).collect();
        prop_assert_eq!(encode_slice(&slice(&moved), &key((tonic + shift) % 12), OverflowPolicy::Smallest), base);
        let alone = encode_slice(&slice(&moved), &key(tonic), OverflowPolicy::Smallest);
        prop_assert_eq!(alone.intervals, base.intervals);
        prop_assert_eq!(alone.degree, (base.degree + shift) % 12);
    }
}

#[test]
fn worked_reductions() {
    let s = |v: &[u8]| reduce_intervals(v, OverflowPolicy::Smallest).to_string();
    assert_eq!(s(&[4, 7, 0]), "4.7._");
    assert_eq!(s(&[4, 4, 10]), "4.10._");
    assert_eq!(s(&[4, 10, 10]), "4.10._");
    assert_eq!(reduce_intervals(&[], OverflowPolicy::Smallest), IntervalSet::EMPTY);
}

#[test]
fn pearson_matches_two_pass_formula() {
    let a = [0.3, 1.0, 2.5, 0.0, 4.0, 1.5, 0.2, 3.3, 0.0, 2.2, 0.7, 1.1];
    for p in builtin_profiles() {
        for mode in [Mode::Major, Mode::Minor] {
            let w = *p.weights(mode);
            let got = pearson(&a, &w).unwrap();
            assert!((got - reference::pearson(&a, &w)).abs() < 1e-12);
        }
    }
}

fn histogram() -> impl Strategy<Value = [f64; 12]> {
    prop::array::uniform12(prop_oneof![Just(0.0), 0.0f64..8.0])
        .prop_filter("needs variance", |h| h.iter().any(|&x| x != h[0]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn argmax_matches_enumeration(h in histogram()) {
        for p in builtin_profiles() {
            let got = estimate_key(&h, &p).unwrap();
            let (tonic, minor, r) = reference::best_key(&h, p.weights(Mode::Major), p.weights(Mode::Minor));
            prop_assert_eq!((got.tonic as usize, got.mode == Mode::Minor), (tonic, minor));
            prop_assert!((got.score - r).abs() < 1e-12);
            for row in key_correlations(&h, &p).unwrap() {
                for s in row {
                    prop_assert!(got.score >= s);
                }
            }
        }
    }

    #[test]
    fn rotating_the_histogram_rotates_the_key(h in histogram(), k in 1usize..12) {
        let p = builtin_profile(DEFAULT_PROFILE).unwrap();
        let mut rotated = [0.0; 12];
        for pc in 0..12 {
            rotated[(pc + k) % 12] = h[pc];
        }
        let a = key_correlations(&h, &p).unwrap();
        let b = key_correlations(&rotated, &p).unwrap();
        for t in 0..12 {
            for m in 0..2 {
                prop_assert!((a[t][m] - b[(t + k) % 12][m]).abs() < 1e-12);
            }
        }
    }
}
