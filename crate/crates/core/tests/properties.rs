//! Property tests for the library invariants: edit-distance metric axioms,
//! tokenizer losslessness, n-gram count conservation, corpus-operation
//! algebra, metric bounds, and rule-engine idempotence.

mod common;

use common::oracle_levenshtein;
use proptest::prelude::*;
use restyle_core::corpus::{
    filter_sentence, partition_by_formality, subselect_by_edit_distance, upweight_duplicate,
    FilterConfig,
};
use restyle_core::metrics::{
    average_ranks, combined_score, corpus_bleu, meaning_proxy, pinc, spearman, ter, AxisRanges,
};
use restyle_core::rules::{formalize, informalize, is_all_caps_word, ReverseRuleProbabilities, RuleLexicons};
use restyle_core::text::{char_edit_distance, ngrams, token_edit_distance, tokenize, TokenizedSentence};

fn lexicons() -> RuleLexicons {
    RuleLexicons::new(
        vec![
            ("didn't".into(), "did not".into()),
            ("don't".into(), "do not".into()),
            ("won't".into(), "will not".into()),
            ("i'm".into(), "i am".into()),
            ("it's".into(), "it is".into()),
        ],
        vec![
            ("u".into(), "you".into()),
            ("ur".into(), "your".into()),
            ("r".into(), "are".into()),
            ("coz".into(), "because".into()),
            ("luv".into(), "love".into()),
            ("wanna".into(), "want to".into()),
            ("gonna".into(), "going to".into()),
        ],
        vec!["suck".into(), "hell".into(), "damn".into()],
        vec!["Marilyn".into(), "London".into(), "Monday".into()],
    )
    .unwrap()
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("the".to_string()),
        Just("cat".to_string()),
        Just("DOG".to_string()),
        Just("nooooo".to_string()),
        Just("yayyyyy".to_string()),
        Just("didn't".to_string()),
        Just("don't".to_string()),
        Just("u".to_string()),
        Just("r".to_string()),
        Just("wanna".to_string()),
        Just("suck".to_string()),
        Just("hell".to_string()),
        Just("marilyn".to_string()),
        Just("I".to_string()),
        Just("i".to_string()),
        Just("1000".to_string()),
        Just("!!!".to_string()),
        Just("????".to_string()),
        Just(".".to_string()),
        Just("ok!!".to_string()),
        Just("HELLO".to_string()),
        Just("it's".to_string()),
        "[a-z]{1,6}".prop_map(|s| s),
    ]
}

fn sentence() -> impl Strategy<Value = TokenizedSentence> {
    prop::collection::vec(word(), 0..12).prop_map(|words| tokenize(&words.join(" ")))
}

fn token_vec() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-d]{1,2}", 0..8)
}

proptest! {
    #[test]
    fn edit_distance_symmetry_and_triangle(a in "[a-d]{0,8}", b in "[a-d]{0,8}", c in "[a-d]{0,8}") {
        let ab = char_edit_distance(&a, &b);
        let ba = char_edit_distance(&b, &a);
        prop_assert_eq!(ab, ba);
        let ac = char_edit_distance(&a, &c);
        let cb = char_edit_distance(&c, &b);
        prop_assert!(ab <= ac + cb, "triangle violated: d({a},{b})={ab} > {ac}+{cb}");
        prop_assert!(ab <= a.chars().count().max(b.chars().count()));
        prop_assert_eq!(char_edit_distance(&a, ""), a.chars().count());
        prop_assert_eq!(ab == 0, a == b);
    }

    #[test]
    fn token_distance_triangle(a in token_vec(), b in token_vec(), c in token_vec()) {
        let ab = token_edit_distance(&a, &b);
        prop_assert_eq!(ab, token_edit_distance(&b, &a));
        prop_assert!(ab <= token_edit_distance(&a, &c) + token_edit_distance(&c, &b));
        prop_assert_eq!(ab, oracle_levenshtein(&a, &b));
    }

    #[test]
    fn tokenizer_lossless_and_idempotent(s in sentence()) {
        let rejoined: String = s.tokens().join(" ");
        let no_ws_tokens: String = rejoined.split_whitespace().collect();
        let no_ws_raw: String = s.raw().split_whitespace().collect();
        prop_assert_eq!(no_ws_tokens, no_ws_raw);
        let again = tokenize(&rejoined);
        prop_assert_eq!(again.tokens(), s.tokens());
    }

    #[test]
    fn ngram_total_matches_window_count(tokens in token_vec(), n in 1usize..5) {
        let ms = ngrams(&tokens, n).unwrap();
        prop_assert_eq!(ms.total(), tokens.len().saturating_sub(n - 1));
    }

    #[test]
    fn upweight_scales_length(items in prop::collection::vec(0u32..100, 0..20), k in 1usize..6) {
        let out = upweight_duplicate(&items, k).unwrap();
        prop_assert_eq!(out.len(), items.len() * k);
    }

    #[test]
    fn subselect_is_threshold_subsequence(pairs in prop::collection::vec(("[a-c]{0,14}", "[a-c]{0,14}"), 0..12), min in 0usize..8) {
        let pairs: Vec<(TokenizedSentence, TokenizedSentence)> = pairs
            .into_iter()
            .map(|(a, b)| (tokenize(&a), tokenize(&b)))
            .collect();
        let out = subselect_by_edit_distance(&pairs, min);
        // survivors satisfy the strict threshold
        for (src, rw) in &out {
            prop_assert!(char_edit_distance(src.raw(), rw.raw()) > min);
        }
        // subsequence of the input
        let mut it = pairs.iter();
        for survivor in &out {
            prop_assert!(it.any(|p| p == survivor));
        }
    }

    #[test]
    fn partition_is_a_partition(raws in prop::collection::vec("[a-f ]{0,12}", 0..14), threshold in -1.0f64..1.0) {
        let sentences: Vec<TokenizedSentence> = raws.iter().map(|r| tokenize(r)).collect();
        let score = |s: &TokenizedSentence| (s.n_chars() as f64) * 0.17 - 1.0;
        let (informal, formal) = partition_by_formality(&sentences, score, threshold);
        let dropped = sentences
            .iter()
            .filter(|s| score(s) == threshold)
            .count();
        prop_assert_eq!(informal.len() + formal.len() + dropped, sentences.len());
        for s in &informal {
            prop_assert!(score(s) < threshold);
        }
        for s in &formal {
            prop_assert!(score(s) > threshold);
        }
    }

    #[test]
    fn filter_idempotent_on_survivors(s in sentence()) {
        let cfg = FilterConfig::default();
        if filter_sentence(&s, &cfg).is_keep() {
            prop_assert!(filter_sentence(&s, &cfg).is_keep());
        }
    }

    #[test]
    fn bleu_is_permutation_invariant(perm_seed in 0u64..1000) {
        let cands: Vec<Vec<String>> = vec![
            vec!["a".into(), "b".into()],
            vec!["b".into(), "c".into(), "d".into()],
            vec!["a".into()],
            vec!["d".into(), "a".into()],
        ];
        let refs: Vec<Vec<Vec<String>>> = vec![
            vec![vec!["a".into(), "b".into(), "c".into()]],
            vec![vec!["b".into(), "c".into()]],
            vec![vec!["a".into()], vec!["b".into()]],
            vec![vec!["d".into(), "a".into(), "a".into()]],
        ];
        let base = corpus_bleu(&cands, &refs, 4).unwrap();
        let mut order: Vec<usize> = (0..cands.len()).collect();
        // cheap deterministic shuffle
        let mut s = perm_seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s as usize) % (i + 1));
        }
        let cands2: Vec<Vec<String>> = order.iter().map(|&i| cands[i].clone()).collect();
        let refs2: Vec<Vec<Vec<String>>> = order.iter().map(|&i| refs[i].clone()).collect();
        let shuffled = corpus_bleu(&cands2, &refs2, 4).unwrap();
        prop_assert!((base - shuffled).abs() < 1e-9);
    }

    #[test]
    fn bleu_improves_when_candidate_becomes_reference(idx in 0usize..3) {
        let mut cands: Vec<Vec<String>> = vec![
            vec!["x".into(), "y".into()],
            vec!["the".into(), "cat".into(), "sat".into()],
            vec!["q".into()],
        ];
        let refs: Vec<Vec<Vec<String>>> = vec![
            vec![vec!["a".into(), "b".into()]],
            vec![vec!["the".into(), "cat".into(), "ran".into()]],
            vec![vec!["q".into(), "r".into()]],
        ];
        let before = corpus_bleu(&cands, &refs, 2).unwrap();
        cands[idx] = refs[idx][0].clone();
        let after = corpus_bleu(&cands, &refs, 2).unwrap();
        prop_assert!(after >= before - 1e-12, "replacing a candidate with a reference dropped BLEU: {before} -> {after}");
    }

    #[test]
    fn pinc_self_is_zero(tokens in prop::collection::vec("[a-d]{1,2}", 1..8)) {
        prop_assert_eq!(pinc(&tokens, &tokens, 4).unwrap(), 0.0);
    }

    #[test]
    fn ter_bounded_by_edit_distance_and_zero_on_self(cand in token_vec(), reference in prop::collection::vec("[a-d]{1,2}", 1..8)) {
        let t = ter(&cand, &[reference.clone()]).unwrap();
        let bound = token_edit_distance(&cand, &reference) as f64 / reference.len() as f64;
        prop_assert!(t <= bound + 1e-12, "shifts should only help: {t} > {bound}");
        if !cand.is_empty() {
            let with_self = vec![reference.clone(), cand.clone()];
            prop_assert_eq!(ter(&cand, &with_self).unwrap(), 0.0);
        }
    }

    #[test]
    fn combined_score_strictly_increasing(f in -2.9f64..2.9, fl in 1.1f64..4.9, m in 1.1f64..5.9, eps in 0.01f64..0.09) {
        let r = AxisRanges::human();
        let base = combined_score(f, fl, m, &r).unwrap();
        prop_assert!(combined_score(f + eps, fl, m, &r).unwrap() > base);
        prop_assert!(combined_score(f, fl + eps, m, &r).unwrap() > base);
        prop_assert!(combined_score(f, fl, m + eps, &r).unwrap() > base);
    }

    #[test]
    fn spearman_invariant_under_increasing_transform(xs in prop::collection::vec(-50i32..50, 3..12), ys in prop::collection::vec(-50i32..50, 3..12)) {
        let n = xs.len().min(ys.len());
        let xs: Vec<f64> = xs[..n].iter().map(|&v| v as f64).collect();
        let ys: Vec<f64> = ys[..n].iter().map(|&v| v as f64).collect();
        let base = spearman(&xs, &ys);
        let tx: Vec<f64> = xs.iter().map(|&v| (0.3 * v).exp()).collect();
        let ty: Vec<f64> = ys.iter().map(|&v| 5.0 * v + 2.0).collect();
        let transformed = spearman(&tx, &ty);
        match (base, transformed) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "transform changed definedness: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn meaning_proxy_stays_in_range(a in token_vec(), b in token_vec()) {
        let m = meaning_proxy(&a, &b);
        prop_assert!((1.0..=6.0).contains(&m));
    }

    #[test]
    fn formalize_idempotent_and_caseless(s in sentence()) {
        let lex = lexicons();
        let once = formalize(&s, &lex);
        let twice = formalize(&once, &lex);
        prop_assert_eq!(&once, &twice, "formalize not idempotent on {:?}", s.raw());
        for tok in once.tokens() {
            prop_assert!(!is_all_caps_word(tok), "all-caps {tok:?} survived in {:?}", once.raw());
        }
    }

    #[test]
    fn formalize_never_grows_runs(s in sentence()) {
        let lex = lexicons();
        let out = formalize(&s, &lex);
        // asterisks don't count: censoring is required to produce them
        fn longest_run(s: &str) -> usize {
            let mut best = 0;
            let mut run = 0;
            let mut prev = None;
            for c in s.chars().filter(|&c| c != '*') {
                run = if Some(c) == prev { run + 1 } else { 1 };
                prev = Some(c);
                best = best.max(run);
            }
            best
        }
        prop_assert!(longest_run(out.raw()) <= longest_run(s.raw()).max(1));
    }

    #[test]
    fn informalize_seeded_determinism(s in sentence(), seed in 0u64..500) {
        let lex = lexicons();
        let probs = ReverseRuleProbabilities { p_uppercase_word: 0.4, p_char_repetition: 0.4, seed };
        prop_assert_eq!(informalize(&s, &lex, &probs), informalize(&s, &lex, &probs));
    }

    #[test]
    fn average_ranks_sum_is_fixed(values in prop::collection::vec(-10i32..10, 1..12)) {
        let values: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let ranks = average_ranks(&values);
        let n = values.len() as f64;
        let sum: f64 = ranks.iter().sum();
        prop_assert!((sum - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }
}

#[test]
fn swear_censoring_preserves_token_length() {
    let lex = lexicons();
    for raw in ["suck", "hell it.", "that may suck!!"] {
        let s = tokenize(raw);
        let out = formalize(&s, &lex);
        for (a, b) in s.tokens().iter().zip(out.tokens().iter()) {
            if lex.is_swear(a) {
                assert_eq!(b.chars().count(), a.chars().count());
                assert_eq!(b.chars().filter(|&c| c == '*').count(), a.chars().count() - 1);
            }
        }
    }
}
