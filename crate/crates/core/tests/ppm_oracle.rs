use chordseq::ppm::{combine_geometric, predict, run_sequence, ContextTrie, ModelConfig, ModelMode, OrderPolicy, PredictionDistribution};
use chordseq_testkit::ppm::{self as reference, Online, Order};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn policy(order: Order) -> OrderPolicy {
    match order {
        Order::Star => OrderPolicy::PpmStar,
        Order::Fixed(n) => OrderPolicy::Fixed(n),
    }
}

fn trie_of(sequences: &[Vec<u32>], alphabet: u32, depth: Option<usize>) -> ContextTrie {
    let mut t = ContextTrie::with_max_depth(alphabet as usize, depth);
    for s in sequences {
        t.train_sequence(s).unwrap();
    }
    t
}

fn assert_proper(p: &[f64]) {
    assert!((p.iter().sum::<f64>() - 1.0).abs() < TOL, "sum {}", p.iter().sum::<f64>());
    assert!(p.iter().all(|&x| x > 0.0));
}

fn check_predict(sequences: &[Vec<u32>], context: &[u32], alphabet: u32, order: Order, depth: Option<usize>) {
    let trie = trie_of(sequences, alphabet, depth);
    let cfg = ModelConfig::new(ModelMode::Ltm).with_order(policy(order));
    let got = predict(&trie, context, &cfg).unwrap();
    let want = reference::distribution(sequences, context, alphabet, order, depth);
    assert_proper(got.probabilities());
    for (g, w) in got.probabilities().iter().zip(&want) {
        assert!((g - w).abs() < TOL, "train {sequences:?} ctx {context:?} {order:?} depth {depth:?}: {:?} vs {want:?}", got.probabilities());
    }
}

fn all_sequences(alphabet: u32, max_len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<u32>| {
                (0..alphabet).map(move |x| {
                    let mut n = s.clone();
                    n.push(x);
                    n
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

#[test]
fn exhaustive_length_8_alphabet_3() {
    let fixed_corpus = vec![vec![0, 1, 2, 0, 1], vec![2, 2, 1]];
    let seqs = all_sequences(3, 8);
    assert_eq!(seqs.len(), 9841);
    for s in &seqs {
        for order in [Order::Star, Order::Fixed(2)] {
            // the sequence as training data, predicting its own continuation
            check_predict(std::slice::from_ref(s), s, 3, order, None);
            // the sequence as a context against a fixed corpus
            check_predict(&fixed_corpus, s, 3, order, None);
        }
        let got = run_sequence(s, &ModelConfig::new(ModelMode::Stm), None, 3).unwrap();
        let want = reference::online(&[], s, 3, Order::Star, None, Online::Stm, 2.0);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < TOL, "STM {s:?}");
        }
    }
}

fn mode_pair() -> impl Strategy<Value = (ModelMode, Online)> {
    prop_oneof![
        Just((ModelMode::Ltm, Online::Ltm)),
        Just((ModelMode::LtmPlus, Online::LtmPlus)),
        Just((ModelMode::Stm, Online::Stm)),
        Just((ModelMode::BothPlus, Online::BothPlus)),
    ]
}

fn order() -> impl Strategy<Value = Order> {
    prop_oneof![Just(Order::Star), (0usize..=4).prop_map(Order::Fixed)]
}

fn corpus() -> impl Strategy<Value = (u32, Vec<Vec<u32>>, Vec<u32>)> {
    (1u32..=5).prop_flat_map(|v| {
        (Just(v), prop::collection::vec(prop::collection::vec(0..v, 0..=12), 1..=3), prop::collection::vec(0..v, 0..=4))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn random_corpora_match_reference((v, train, context) in corpus(), order in order(), depth in prop::option::of(0usize..=4)) {
        check_predict(&train, &context, v, order, depth);
    }

    #[test]
    fn online_runs_match_reference(
        (v, train, _) in corpus(),
        test_len in 0usize..=12,
        seed in any::<u64>(),
        order in order(),
        (mode, online) in mode_pair(),
    ) {
        let test: Vec<u32> = (0..test_len).map(|i| ((seed >> (i * 5 % 60)) % v as u64) as u32).collect();
        let base = trie_of(&train, v, None);
        let cfg = ModelConfig::new(mode).with_order(policy(order));
        let got = run_sequence(&test, &cfg, Some(&base), v as usize).unwrap();
        let want = reference::online(&train, &test, v, order, None, online, cfg.bias);
        for (i, (g, w)) in got.iter().zip(&want).enumerate() {
            prop_assert!((g - w).abs() < TOL, "position {}: {} vs {}", i, g, w);
        }
    }

    #[test]
    fn trie_counts_match_ngram_tabulation((v, train, _) in corpus(), depth in prop::option::of(0usize..=4)) {
        let trie = trie_of(&train, v, depth);
        prop_assert_eq!(trie.total(), train.iter().map(|s| s.len() as u64).sum::<u64>());
        let longest = depth.unwrap_or(12);
        for ctx in all_sequences(v, longest.min(3)) {
            let got = trie.continuations(&ctx);
            let want: Vec<(u32, u64)> = (0..v)
                .map(|x| (x, reference::continuation(&train, &ctx, x)))
                .filter(|&(_, c)| c > 0 && ctx.len() <= longest)
                .collect();
            prop_assert_eq!(got, want, "context {:?}", ctx);
        }
    }

    #[test]
    fn both_plus_swap_invariant_and_matches_formula(
        raw in prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 2..=8),
        bias in 0.0f64..6.0,
    ) {
        let norm = |v: Vec<f64>| { let z: f64 = v.iter().sum(); v.into_iter().map(|x| x / z).collect::<Vec<_>>() };
        let p = norm(raw.iter().map(|r| r.0).collect());
        let q = norm(raw.iter().map(|r| r.1).collect());
        let dp = to_dist(&p);
        let dq = to_dist(&q);
        let pq = combine_geometric(&[&dp, &dq], bias).unwrap();
        let qp = combine_geometric(&[&dq, &dp], bias).unwrap();
        let want = reference::geometric(&[p, q], bias);
        assert_proper(pq.probabilities());
        for i in 0..want.len() {
            prop_assert!((pq.probabilities()[i] - qp.probabilities()[i]).abs() < 1e-15);
            prop_assert!((pq.probabilities()[i] - want[i]).abs() < 1e-12);
        }
    }
}

fn to_dist(p: &[f64]) -> PredictionDistribution {
    PredictionDistribution::new(p.to_vec()).unwrap()
}

#[test]
fn fixed_p_q_b2_against_direct_formula() {
    let p = vec![0.7, 0.2, 0.1];
    let q = vec![0.25, 0.25, 0.5];
    let got = combine_geometric(&[&to_dist(&p), &to_dist(&q)], 2.0).unwrap();
    let want = reference::geometric(&[p, q], 2.0);
    for (g, w) in got.probabilities().iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn five_token_toy_corpus_online() {
    let train = vec![vec![0, 1, 2, 1, 0]];
    let test = [0, 1, 1, 2, 0];
    let base = trie_of(&train, 3, None);
    for (mode, online) in [(ModelMode::Ltm, Online::Ltm), (ModelMode::LtmPlus, Online::LtmPlus), (ModelMode::Stm, Online::Stm), (ModelMode::BothPlus, Online::BothPlus)] {
        let got = run_sequence(&test, &ModelConfig::new(mode), Some(&base), 3).unwrap();
        let want = reference::online(&train, &test, 3, Order::Star, None, online, 2.0);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < TOL, "{mode}");
        }
    }
}
