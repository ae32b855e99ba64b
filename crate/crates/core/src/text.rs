//! Deterministic tokenization, n-gram extraction, and edit-distance primitives.
//!
//! Every other module works on [`TokenizedSentence`] values produced here. The
//! tokenizer splits on whitespace and then peels maximal leading/trailing
//! punctuation runs off each chunk, so contractions ("didn't") and interior
//! hyphens survive as single tokens while terminal runs ("????") become their
//! own token. It is lossless modulo whitespace and idempotent at the token
//! level.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

/// A sentence with its deterministic token segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    raw: String,
    tokens: Vec<String>,
    n_chars: usize,
}

impl TokenizedSentence {
    /// Rebuild a sentence from a token sequence. The raw form is the
    /// space-joined tokens, which re-tokenizes to the same sequence for any
    /// tokenizer-produced input.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let raw = tokens.join(" ");
        let n_chars = raw.chars().count();
        TokenizedSentence { raw, tokens, n_chars }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn n_chars(&self) -> usize {
        self.n_chars
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for TokenizedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Split raw text into tokens: whitespace chunks, with maximal leading and
/// trailing punctuation runs peeled into their own tokens. Interior
/// punctuation (apostrophes, hyphens) stays inside the word token. Empty or
/// all-whitespace input yields no tokens.
pub fn tokenize(raw: &str) -> TokenizedSentence {
    let mut tokens = Vec::new();
    for chunk in raw.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let lead = chars.iter().take_while(|&&c| is_punct(c)).count();
        if lead == chars.len() {
            tokens.push(chunk.to_string());
            continue;
        }
        let trail = chars.iter().rev().take_while(|&&c| is_punct(c)).count();
        if lead > 0 {
            tokens.push(chars[..lead].iter().collect());
        }
        tokens.push(chars[lead..chars.len() - trail].iter().collect());
        if trail > 0 {
            tokens.push(chars[chars.len() - trail..].iter().collect());
        }
    }
    TokenizedSentence {
        raw: raw.to_string(),
        n_chars: raw.chars().count(),
        tokens,
    }
}

/// Prose-style rendering: join with spaces but attach punctuation-only tokens
/// to the preceding word ("Are you kidding me ?" -> "Are you kidding me?").
/// Display helper only; the canonical raw form of constructed sentences is the
/// plain space join.
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        let punct_only = !tok.is_empty() && tok.chars().all(is_punct);
        if i > 0 && !punct_only {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Levenshtein distance over Unicode scalar values, unit costs, no
/// transposition.
pub fn char_edit_distance(a: &str, b: &str) -> usize {
    let av: Vec<char> = a.chars().collect();
    let bv: Vec<char> = b.chars().collect();
    levenshtein(&av, &bv)
}

/// Levenshtein distance over token sequences.
pub fn token_edit_distance<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> usize {
    let av: Vec<&str> = a.iter().map(|s| s.as_ref()).collect();
    let bv: Vec<&str> = b.iter().map(|s| s.as_ref()).collect();
    levenshtein(&av, &bv)
}

pub(crate) fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = alloc::vec![0usize; b.len() + 1];
    for (i, ai) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, bj) in b.iter().enumerate() {
            let cost = usize::from(ai != bj);
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Multiset of n-grams extracted from one token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramMultiset {
    order: usize,
    entries: HashMap<Vec<String>, usize>,
}

impl NgramMultiset {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &HashMap<Vec<String>, usize> {
        &self.entries
    }

    pub fn count(&self, gram: &[String]) -> usize {
        self.entries.get(gram).copied().unwrap_or(0)
    }

    /// Total occurrences: max(0, token_count - n + 1) for the source sentence.
    pub fn total(&self) -> usize {
        self.entries.values().sum()
    }

    /// Number of distinct n-grams.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextError {
    /// n-gram order must be at least 1.
    ZeroOrder,
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextError::ZeroOrder => f.write_str("n-gram order must be >= 1"),
        }
    }
}

/// Sliding-window n-gram multiset; empty when the sentence is shorter than n.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Result<NgramMultiset, TextError> {
    if n == 0 {
        return Err(TextError::ZeroOrder);
    }
    let mut entries: HashMap<Vec<String>, usize> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<String> = window.iter().map(|t| t.as_ref().to_string()).collect();
            *entries.entry(key).or_insert(0) += 1;
        }
    }
    Ok(NgramMultiset { order: n, entries })
}
