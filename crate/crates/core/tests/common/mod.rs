//! Independent oracles and corpus generators shared by the integration
//! tests. Everything here is deliberately written against the metric
//! definitions from first principles (scans and recursion instead of the
//! library's hash-based implementations) so the main code paths are checked
//! against a second route.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha8Rng::from_seed(s)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Memoized-recursion Levenshtein, the oracle for both edit distances.
pub fn oracle_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

fn window_count(tokens: &[String], gram: &[String]) -> usize {
    if tokens.len() < gram.len() {
        return 0;
    }
    tokens.windows(gram.len()).filter(|w| *w == gram).count()
}

fn distinct_ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            if !out.iter().any(|g| g[..] == *w) {
                out.push(w.to_vec());
            }
        }
    }
    out
}

/// Brute-force corpus BLEU: exhaustive n-gram counting by window scans,
/// per-gram clipping against the max reference count, closest-reference
/// brevity penalty (ties toward the shorter reference), geometric mean over
/// orders where candidates have n-grams.
pub fn oracle_bleu(candidates: &[Vec<String>], references: &[Vec<Vec<String>>], max_n: usize) -> f64 {
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut cand_len = 0usize;
    let mut ref_len = 0usize;
    for (cand, refs) in candidates.iter().zip(references.iter()) {
        cand_len += cand.len();
        let mut best_ref = refs[0].len();
        for r in &refs[1..] {
            let better = (r.len() as i64 - cand.len() as i64).abs()
                < (best_ref as i64 - cand.len() as i64).abs()
                || ((r.len() as i64 - cand.len() as i64).abs()
                    == (best_ref as i64 - cand.len() as i64).abs()
                    && r.len() < best_ref);
            if better {
                best_ref = r.len();
            }
        }
        ref_len += best_ref;
        for n in 1..=max_n {
            for gram in distinct_ngrams(cand, n) {
                let c = window_count(cand, &gram);
                let clip = refs.iter().map(|r| window_count(r, &gram)).max().unwrap_or(0);
                matches[n - 1] += c.min(clip);
            }
            totals[n - 1] += cand.len().saturating_sub(n - 1);
        }
    }
    if cand_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut used = 0;
    for n in 0..max_n {
        if totals[n] == 0 {
            continue;
        }
        if matches[n] == 0 {
            return 0.0;
        }
        log_sum += (matches[n] as f64 / totals[n] as f64).ln();
        used += 1;
    }
    if used == 0 {
        return 0.0;
    }
    let bp = if cand_len < ref_len {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    } else {
        1.0
    };
    100.0 * bp * (log_sum / used as f64).exp()
}

/// Set-intersection PINC oracle over distinct n-grams.
pub fn oracle_pinc(source: &[String], candidate: &[String], max_n: usize) -> f64 {
    let mut acc = 0.0;
    let mut used = 0;
    for n in 1..=max_n {
        let cand = distinct_ngrams(candidate, n);
        if cand.is_empty() {
            continue;
        }
        let src = distinct_ngrams(source, n);
        let overlap = cand.iter().filter(|g| src.iter().any(|s| s == *g)).count();
        acc += 1.0 - overlap as f64 / cand.len() as f64;
        used += 1;
    }
    if used == 0 {
        return 0.0;
    }
    100.0 * acc / used as f64
}

/// Exhaustive-shift TER oracle: breadth-first search over every block shift
/// (any block, any landing position), minimizing shifts + remaining edit
/// distance. Exact for the tiny sentences it is used on.
pub fn oracle_ter_edits(candidate: &[String], reference: &[String]) -> usize {
    let start: Vec<String> = candidate.to_vec();
    let mut best = oracle_levenshtein(&start, reference);
    let mut seen: HashMap<Vec<String>, usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut queue: VecDeque<(Vec<String>, usize)> = VecDeque::new();
    queue.push_back((start, 0));
    while let Some((state, shifts)) = queue.pop_front() {
        if shifts + 1 >= best {
            continue; // one more shift cannot improve on the incumbent
        }
        for start_idx in 0..state.len() {
            for len in 1..=state.len() - start_idx {
                let block: Vec<String> = state[start_idx..start_idx + len].to_vec();
                let mut removed: Vec<String> = Vec::with_capacity(state.len() - len);
                removed.extend_from_slice(&state[..start_idx]);
                removed.extend_from_slice(&state[start_idx + len..]);
                for ins in 0..=removed.len() {
                    if ins == start_idx {
                        continue;
                    }
                    let mut next: Vec<String> = Vec::with_capacity(state.len());
                    next.extend_from_slice(&removed[..ins]);
                    next.extend_from_slice(&block);
                    next.extend_from_slice(&removed[ins..]);
                    let cost = shifts + 1;
                    if seen.get(&next).is_some_and(|&c| c <= cost) {
                        continue;
                    }
                    let total = cost + oracle_levenshtein(&next, reference);
                    if total < best {
                        best = total;
                    }
                    seen.insert(next.clone(), cost);
                    queue.push_back((next, cost));
                }
            }
        }
    }
    best
}

pub fn oracle_ter(candidate: &[String], references: &[Vec<String>]) -> f64 {
    references
        .iter()
        .map(|r| oracle_ter_edits(candidate, r) as f64 / r.len() as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Tie-free Spearman via the rank-difference formula 1 - 6 sum d^2 / (n(n^2-1)).
pub fn oracle_spearman_no_ties(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |values: &[f64]| -> Vec<usize> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let mut ranks = vec![0usize; values.len()];
        for (pos, &idx) in order.iter().enumerate() {
            ranks[idx] = pos + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let d2: f64 = rx
        .iter()
        .zip(ry.iter())
        .map(|(a, b)| {
            let d = *a as f64 - *b as f64;
            d * d
        })
        .sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Random token sequence over a small vocabulary.
pub fn gen_tokens(rng: &mut ChaCha8Rng, min_len: usize, max_len: usize, vocab: &[&str]) -> Vec<String> {
    let len = min_len + pick(rng, max_len - min_len + 1);
    (0..len).map(|_| vocab[pick(rng, vocab.len())].to_string()).collect()
}

pub const TINY_VOCAB: &[&str] = &["the", "cat", "dog", "sat", "ran", "on", "a", "mat", "rug", "saw"];

/// Template-based synthetic corpora for the statistical tests: formal seed
/// sentences plus informal counterparts produced by the reverse rule engine.
pub mod synthetic {
    use super::{pick, ChaCha8Rng};
    use restyle_core::rules::{informalize, ReverseRuleProbabilities, RuleLexicons};
    use restyle_core::text::{tokenize, TokenizedSentence};

    pub fn lexicons() -> RuleLexicons {
        RuleLexicons::new(
            vec![
                ("didn't".into(), "did not".into()),
                ("don't".into(), "do not".into()),
                ("won't".into(), "will not".into()),
                ("can't".into(), "cannot".into()),
                ("i'm".into(), "i am".into()),
                ("it's".into(), "it is".into()),
                ("you're".into(), "you are".into()),
            ],
            vec![
                ("u".into(), "you".into()),
                ("ur".into(), "your".into()),
                ("r".into(), "are".into()),
                ("coz".into(), "because".into()),
                ("luv".into(), "love".into()),
                ("gr8".into(), "great".into()),
                ("wanna".into(), "want to".into()),
                ("gonna".into(), "going to".into()),
            ],
            vec!["suck".into(), "hell".into()],
            vec!["Monroe".into(), "London".into()],
        )
        .unwrap()
    }

    const SUBJECTS: &[&str] = &["I", "You", "We", "They", "He", "She", "My friend", "The teacher"];
    const VERBS: &[&str] = &[
        "did not know",
        "do not like",
        "would like to see",
        "want to see",
        "love",
        "appreciate",
        "cannot forget",
        "will not miss",
        "are going to watch",
    ];
    const OBJECTS: &[&str] = &[
        "the answer",
        "your message",
        "this movie",
        "the show because it is great",
        "that song",
        "his idea",
        "the game",
        "her performance",
        "the final episode",
    ];

    pub fn formal_sentence(rng: &mut ChaCha8Rng) -> TokenizedSentence {
        let raw = format!(
            "{} {} {} .",
            SUBJECTS[pick(rng, SUBJECTS.len())],
            VERBS[pick(rng, VERBS.len())],
            OBJECTS[pick(rng, OBJECTS.len())],
        );
        tokenize(&raw)
    }

    pub fn formal_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<TokenizedSentence> {
        (0..n).map(|_| formal_sentence(rng)).collect()
    }

    /// (informal, formal) pairs: formal seeds pushed through the reverse
    /// rules.
    pub fn informal_formal_pairs(
        rng: &mut ChaCha8Rng,
        n: usize,
        probs: &ReverseRuleProbabilities,
    ) -> Vec<(TokenizedSentence, TokenizedSentence)> {
        let lex = lexicons();
        (0..n)
            .map(|_| {
                let formal = formal_sentence(rng);
                let informal = informalize(&formal, &lex, probs);
                (informal, formal)
            })
            .collect()
    }
}
