//! Rule-based style transfer in both directions.
//!
//! The formalizing direction applies, in a fixed order: repetition collapse,
//! slang replacement, contraction expansion, swear censoring, all-caps
//! lowercasing, and capitalization (sentence start, pronoun "I", gazetteer
//! proper nouns). The informalizing direction always applies the reverse
//! capitalization/contraction/slang rules and applies word-uppercasing and
//! character repetition stochastically, with a per-sentence random stream
//! derived from (seed, sentence text) so results do not depend on iteration
//! order.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use hashbrown::{HashMap, HashSet};

use crate::text::TokenizedSentence;
use crate::util::{next_f64, next_index, stream_rng};

/// Lexicon problems detected while building [`RuleLexicons`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconError {
    /// A key was not lowercase.
    KeyNotLowercase(String),
    /// A key mapped to two different values.
    ConflictingEntry(String),
    /// A replacement value contains a token that is itself a key, which would
    /// break formalize idempotence.
    ChainedEntry { key: String, via: String },
    /// A line did not have the `key<TAB>value` shape.
    MalformedLine(String),
}

impl fmt::Display for LexiconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexiconError::KeyNotLowercase(k) => write!(f, "lexicon key not lowercase: {k:?}"),
            LexiconError::ConflictingEntry(k) => write!(f, "conflicting lexicon entries for key {k:?}"),
            LexiconError::ChainedEntry { key, via } => {
                write!(f, "lexicon entry {key:?} expands through another key {via:?}")
            }
            LexiconError::MalformedLine(l) => write!(f, "expected `key<TAB>value`, got {l:?}"),
        }
    }
}

/// The handcrafted lexicons the rule engine runs on: contraction expansions,
/// slang replacements, a swear list, and a proper-noun gazetteer. Forward maps
/// are keyed by lowercase token; the inverse direction is keyed by expansion
/// token sequence (first entry wins when two keys share an expansion).
#[derive(Debug, Clone, Default)]
pub struct RuleLexicons {
    contractions: HashMap<String, String>,
    contractions_inv: Vec<(Vec<String>, String)>,
    slang: HashMap<String, String>,
    slang_inv: Vec<(Vec<String>, String)>,
    swear: HashSet<String>,
    proper_nouns: HashMap<String, String>,
}

fn split_value(value: &str) -> Vec<String> {
    value.split_whitespace().map(|t| t.to_string()).collect()
}

fn build_map(
    pairs: &[(String, String)],
    check_chain_against: &[&[(String, String)]],
) -> Result<(HashMap<String, String>, Vec<(Vec<String>, String)>), LexiconError> {
    let mut map = HashMap::new();
    let mut inverse: Vec<(Vec<String>, String)> = Vec::new();
    let mut seen_values: HashSet<Vec<String>> = HashSet::new();
    for (key, value) in pairs {
        if key != &key.to_lowercase() {
            return Err(LexiconError::KeyNotLowercase(key.clone()));
        }
        for tok in split_value(value) {
            for family in check_chain_against {
                if family.iter().any(|(k, _)| k == &tok) {
                    return Err(LexiconError::ChainedEntry { key: key.clone(), via: tok });
                }
            }
        }
        match map.get(key) {
            Some(existing) if existing != value => {
                return Err(LexiconError::ConflictingEntry(key.clone()));
            }
            Some(_) => continue,
            None => {}
        }
        map.insert(key.clone(), value.clone());
        let value_tokens = split_value(value);
        if seen_values.insert(value_tokens.clone()) {
            inverse.push((value_tokens, key.clone()));
        }
    }
    // Longest expansions first so the inverse scan prefers "you all" -> "yall"
    // over "you" -> "u".
    inverse.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok((map, inverse))
}

impl RuleLexicons {
    /// Build lexicons from already-parsed entries, validating the invariants
    /// the rule engine relies on.
    pub fn new(
        contractions: Vec<(String, String)>,
        slang: Vec<(String, String)>,
        swear: Vec<String>,
        proper_nouns: Vec<String>,
    ) -> Result<Self, LexiconError> {
        let (cmap, cinv) = build_map(&contractions, &[&contractions, &slang])?;
        let (smap, sinv) = build_map(&slang, &[&contractions, &slang])?;
        let mut swear_set = HashSet::new();
        for w in swear {
            let lw = w.to_lowercase();
            if !lw.is_empty() {
                swear_set.insert(lw);
            }
        }
        let mut gazetteer = HashMap::new();
        for name in proper_nouns {
            let name = name.trim();
            if !name.is_empty() {
                gazetteer.insert(name.to_lowercase(), name.to_owned());
            }
        }
        Ok(RuleLexicons {
            contractions: cmap,
            contractions_inv: cinv,
            slang: smap,
            slang_inv: sinv,
            swear: swear_set,
            proper_nouns: gazetteer,
        })
    }

    /// Parse `key<TAB>value` lines (blank lines skipped).
    pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, LexiconError> {
        let mut out = Vec::new();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('\t') else {
                return Err(LexiconError::MalformedLine(line.to_string()));
            };
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    /// Parse one-word-per-line lists (swear list, gazetteer).
    pub fn parse_words(text: &str) -> Vec<String> {
        text.lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.to_string())
            .collect()
    }

    pub fn contractions(&self) -> &HashMap<String, String> {
        &self.contractions
    }

    pub fn slang(&self) -> &HashMap<String, String> {
        &self.slang
    }

    pub fn swear(&self) -> &HashSet<String> {
        &self.swear
    }

    pub fn proper_nouns(&self) -> &HashMap<String, String> {
        &self.proper_nouns
    }

    pub fn is_contraction(&self, token: &str) -> bool {
        self.contractions.contains_key(&token.to_lowercase())
    }

    pub fn is_slang(&self, token: &str) -> bool {
        self.slang.contains_key(&token.to_lowercase())
    }

    pub fn is_swear(&self, token: &str) -> bool {
        self.swear.contains(&token.to_lowercase())
    }

    /// Stable digest of the lexicon contents. Models trained against one
    /// lexicon set produce skewed features under another, so consumers can
    /// pin this.
    pub fn fingerprint(&self) -> u64 {
        let mut acc: u64 = 0;
        let mut mix = |family: u64, entry: &str| {
            let mut bytes = Vec::with_capacity(entry.len() + 1);
            bytes.push(family as u8);
            bytes.extend_from_slice(entry.as_bytes());
            // order-independent combination so map iteration order is moot
            acc = acc.wrapping_add(crate::util::fnv1a64(&bytes));
        };
        for (k, v) in &self.contractions {
            mix(1, &alloc::format!("{k}\t{v}"));
        }
        for (k, v) in &self.slang {
            mix(2, &alloc::format!("{k}\t{v}"));
        }
        for w in &self.swear {
            mix(3, w);
        }
        for (k, v) in &self.proper_nouns {
            mix(4, &alloc::format!("{k}\t{v}"));
        }
        acc
    }
}

/// Probabilities for the stochastic reverse rules, plus the seed every
/// per-sentence stream derives from. Defaults follow the automatically
/// counted frequencies of the lowercase (8%) and repetition (5%) edit
/// categories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverseRuleProbabilities {
    pub p_uppercase_word: f64,
    pub p_char_repetition: f64,
    pub seed: u64,
}

impl Default for ReverseRuleProbabilities {
    fn default() -> Self {
        ReverseRuleProbabilities {
            p_uppercase_word: 0.08,
            p_char_repetition: 0.05,
            seed: 0,
        }
    }
}

fn is_punct_char(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Collapse emphasis repetitions inside one token: alphabetic same-char runs
/// of length >= 3 become a single character, punctuation runs of length >= 2
/// become their first mark. Digits are left alone ("1000" is not emphasis)
/// and asterisk runs are preserved so censored tokens survive re-application.
pub fn collapse_repetitions(token: &str) -> String {
    let chars: Vec<char> = token.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_punct_char(c) && c != '*' {
            let mut j = i;
            while j < chars.len() && is_punct_char(chars[j]) && chars[j] != '*' {
                j += 1;
            }
            if j - i >= 2 {
                out.push(c);
            } else {
                out.extend(&chars[i..j]);
            }
            i = j;
        } else if c.is_alphabetic() {
            let mut j = i;
            while j < chars.len() && chars[j] == c {
                j += 1;
            }
            if j - i >= 3 {
                out.push(c);
            } else {
                out.extend(&chars[i..j]);
            }
            i = j;
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

fn alphabetic_count(token: &str) -> usize {
    token.chars().filter(|c| c.is_alphabetic()).count()
}

/// All alphabetic chars uppercase and at least two of them.
pub fn is_all_caps_word(token: &str) -> bool {
    alphabetic_count(token) >= 2
        && token.chars().filter(|c| c.is_alphabetic()).all(|c| c.is_uppercase())
}

fn censor(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        None => String::new(),
        Some(first) => {
            let rest = chars.count();
            let mut out = String::new();
            out.push(first);
            for _ in 0..rest {
                out.push('*');
            }
            out
        }
    }
}

fn uppercase_first_alphabetic(token: &str) -> String {
    let mut out = String::new();
    let mut done = false;
    for c in token.chars() {
        if !done && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            done = true;
        } else {
            out.push(c);
        }
    }
    out
}

fn lowercase_first_alphabetic(token: &str) -> String {
    let mut out = String::new();
    let mut done = false;
    for c in token.chars() {
        if !done && c.is_alphabetic() {
            out.extend(c.to_lowercase());
            done = true;
        } else {
            out.push(c);
        }
    }
    out
}

/// Replace tokens through a phrase map: at each position take the longest
/// window whose lowercased form matches a map key and substitute the
/// replacement. Used for contraction formation and slang formation.
fn apply_inverse(tokens: &[String], inverse: &[(Vec<String>, String)]) -> Vec<String> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut matched = false;
        for (phrase, replacement) in inverse {
            let n = phrase.len();
            if n == 0 || i + n > tokens.len() {
                continue;
            }
            if lowered[i..i + n] == phrase[..] {
                out.push(replacement.clone());
                i += n;
                matched = true;
                break;
            }
        }
        if !matched {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Replace single tokens through a forward map, splitting multi-word values
/// ("wanna" -> "want", "to").
fn apply_forward(tokens: &[String], map: &HashMap<String, String>) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        match map.get(&tok.to_lowercase()) {
            Some(value) => out.extend(split_value(value)),
            None => out.push(tok.clone()),
        }
    }
    out
}

/// Make a sentence more formal. Deterministic; empty input is returned
/// unchanged. See the module docs for the rule order.
pub fn formalize(s: &TokenizedSentence, lex: &RuleLexicons) -> TokenizedSentence {
    if s.is_empty() {
        return s.clone();
    }
    // 1. collapse character/punctuation repetitions
    let mut tokens: Vec<String> =
        s.tokens().iter().map(|t| collapse_repetitions(t)).collect();
    // 2. slang -> standard
    tokens = apply_forward(&tokens, &lex.slang);
    // 3. expand contractions
    tokens = apply_forward(&tokens, &lex.contractions);
    // 4. censor swear words
    for tok in tokens.iter_mut() {
        if lex.swear.contains(&tok.to_lowercase()) {
            *tok = censor(tok);
        }
    }
    // 5. lowercase all-uppercase words
    for tok in tokens.iter_mut() {
        if is_all_caps_word(tok) {
            *tok = tok.to_lowercase();
        }
    }
    // 6. capitalize: gazetteer proper nouns, the pronoun "i", sentence start
    for tok in tokens.iter_mut() {
        if let Some(canonical) = lex.proper_nouns.get(&tok.to_lowercase()) {
            *tok = canonical.clone();
        } else if tok == "i" {
            *tok = "I".to_string();
        }
    }
    if let Some(first_word) = tokens.iter_mut().find(|t| alphabetic_count(t) > 0) {
        *first_word = uppercase_first_alphabetic(first_word);
    }
    TokenizedSentence::from_tokens(tokens)
}

/// Make a sentence more informal. The capitalization, contraction, and slang
/// reversals always apply; word-uppercasing and character repetition fire per
/// sentence with the configured probabilities. The random stream depends only
/// on (seed, sentence text), so equal inputs give equal outputs regardless of
/// processing order or thread count.
pub fn informalize(
    s: &TokenizedSentence,
    lex: &RuleLexicons,
    probs: &ReverseRuleProbabilities,
) -> TokenizedSentence {
    if s.is_empty() {
        return s.clone();
    }
    let mut rng = stream_rng(probs.seed, s.raw().as_bytes());
    // Fixed draw order keeps the stream aligned whatever the sentence shape.
    let u_upper = next_f64(&mut rng);
    let u_upper_pick = next_index(&mut rng, 1 << 30);
    let u_rep = next_f64(&mut rng);

    // reverse capitalization: lowercase the sentence-initial letter and "I"
    let mut tokens: Vec<String> = s.tokens().to_vec();
    for tok in tokens.iter_mut() {
        if tok == "I" {
            *tok = "i".to_string();
        }
    }
    if let Some(first_word) = tokens.iter_mut().find(|t| alphabetic_count(t) > 0) {
        *first_word = lowercase_first_alphabetic(first_word);
    }
    // contraction formation, then slang formation
    tokens = apply_inverse(&tokens, &lex.contractions_inv);
    tokens = apply_inverse(&tokens, &lex.slang_inv);

    if u_upper < probs.p_uppercase_word {
        let eligible: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| alphabetic_count(t) >= 2)
            .map(|(i, _)| i)
            .collect();
        if !eligible.is_empty() {
            let idx = eligible[u_upper_pick % eligible.len()];
            tokens[idx] = tokens[idx].to_uppercase();
        }
    }
    if u_rep < probs.p_char_repetition {
        if let Some(last) = tokens.last_mut() {
            if let Some(c) = last.chars().last() {
                for _ in 0..4 {
                    last.push(c);
                }
            }
        }
    }
    TokenizedSentence::from_tokens(tokens)
}

/// Edit-category counts between a pair of sentences, for the categories the
/// engine can detect automatically. Categories are not mutually exclusive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EditCategoryCounts {
    pub capitalization: usize,
    pub punctuation: usize,
    pub contraction: usize,
    pub normalization: usize,
    pub lowercase: usize,
    pub repetition: usize,
}

impl EditCategoryCounts {
    pub fn total(&self) -> usize {
        self.capitalization
            + self.punctuation
            + self.contraction
            + self.normalization
            + self.lowercase
            + self.repetition
    }
}

fn is_punct_token(t: &str) -> bool {
    !t.is_empty() && t.chars().all(is_punct_char)
}

/// Align two token sequences by longest common subsequence over a normalized
/// form (lowercased, repetitions collapsed) and return the aligned index
/// pairs.
fn align(a: &[String], b: &[String]) -> Vec<(usize, usize)> {
    let na: Vec<String> = a.iter().map(|t| collapse_repetitions(t).to_lowercase()).collect();
    let nb: Vec<String> = b.iter().map(|t| collapse_repetitions(t).to_lowercase()).collect();
    let n = na.len();
    let m = nb.len();
    let mut dp = alloc::vec![alloc::vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i][j] = if na[i] == nb[j] {
                dp[i + 1][j + 1] + 1
            } else {
                dp[i + 1][j].max(dp[i][j + 1])
            };
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if na[i] == nb[j] {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if dp[i + 1][j] >= dp[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

/// Count which rule families separate `source` from `rewrite`: a pair
/// exhibits a category when applying that family alone moves the source
/// token(s) toward the rewrite. `source` is conventionally the informal side.
pub fn categorize_edits(
    source: &TokenizedSentence,
    rewrite: &TokenizedSentence,
    lex: &RuleLexicons,
) -> EditCategoryCounts {
    let mut counts = EditCategoryCounts::default();
    let src = source.tokens();
    let dst = rewrite.tokens();
    let dst_lower: Vec<String> = dst.iter().map(|t| t.to_lowercase()).collect();
    let src_lower: Vec<String> = src.iter().map(|t| t.to_lowercase()).collect();

    for (i, j) in align(src, dst) {
        let (a, b) = (&src[i], &dst[j]);
        if a == b {
            continue;
        }
        let (la, lb) = (a.to_lowercase(), b.to_lowercase());
        if la == lb {
            // pure case change
            if a == &la && b != &lb {
                counts.capitalization += 1;
            }
            if is_all_caps_word(a) && b == &lb {
                counts.lowercase += 1;
            }
        } else if collapse_repetitions(&la) == collapse_repetitions(&lb)
            && collapse_repetitions(&la) != la
        {
            counts.repetition += 1;
        }
    }

    let window_found = |needle: &[String], hay: &[String]| -> bool {
        !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
    };
    for tok in &src_lower {
        if let Some(expansion) = lex.contractions.get(tok) {
            if window_found(&split_value(expansion), &dst_lower) {
                counts.contraction += 1;
            }
        }
        if let Some(standard) = lex.slang.get(tok) {
            if window_found(&split_value(standard), &dst_lower) {
                counts.normalization += 1;
            }
        }
    }
    // reverse direction: rewrite contracted or slangified a source phrase
    for tok in &dst_lower {
        if let Some(expansion) = lex.contractions.get(tok) {
            if window_found(&split_value(expansion), &src_lower) {
                counts.contraction += 1;
            }
        }
        if let Some(standard) = lex.slang.get(tok) {
            if window_found(&split_value(standard), &src_lower) {
                counts.normalization += 1;
            }
        }
    }

    // punctuation: symmetric multiset difference over punctuation-only tokens
    // (counts both added and removed marks)
    let mut punct: HashMap<&str, i64> = HashMap::new();
    for t in src.iter().filter(|t| is_punct_token(t)) {
        *punct.entry(t.as_str()).or_insert(0) += 1;
    }
    for t in dst.iter().filter(|t| is_punct_token(t)) {
        *punct.entry(t.as_str()).or_insert(0) -= 1;
    }
    counts.punctuation = punct.values().map(|d| d.unsigned_abs() as usize).sum();

    counts
}
