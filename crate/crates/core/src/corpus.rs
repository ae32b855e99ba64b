//! Corpus construction: creation filters, formality partitioning, duplication
//! and sub-selection used by the training regimes, and descriptive statistics
//! over parallel splits.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::{char_edit_distance, TokenizedSentence};

/// Transfer direction of a parallel example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    InformalToFormal,
    FormalToInformal,
}

/// One source sentence with up to four reference rewrites.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelExample {
    pub id: String,
    pub source: TokenizedSentence,
    pub references: Vec<TokenizedSentence>,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Tune,
    Test,
}

/// A named corpus split. Train examples may carry a single reference;
/// tune/test is expected to carry four.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub name: SplitName,
    pub examples: Vec<ParallelExample>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    EmptySplit,
    /// An example without references (every operation here needs at least one).
    MissingReference(String),
    InvalidFilterBounds { min_tokens: usize, max_tokens: usize },
    ZeroDuplicationFactor,
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::EmptySplit => f.write_str("corpus split is empty"),
            CorpusError::MissingReference(id) => write!(f, "example {id:?} has no references"),
            CorpusError::InvalidFilterBounds { min_tokens, max_tokens } => {
                write!(f, "filter bounds must satisfy 1 <= min <= max, got {min_tokens}..{max_tokens}")
            }
            CorpusError::ZeroDuplicationFactor => f.write_str("duplication factor must be >= 1"),
        }
    }
}

/// Sentence-level creation filters: questions, URLs, and length bounds
/// (inclusive at both ends).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub reject_questions: bool,
    pub reject_urls: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_tokens: 5,
            max_tokens: 25,
            reject_questions: true,
            reject_urls: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return Err(CorpusError::InvalidFilterBounds {
                min_tokens: self.min_tokens,
                max_tokens: self.max_tokens,
            });
        }
        Ok(())
    }
}

/// Rejection reasons, in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Question,
    Url,
    TooShort,
    TooLong,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::Question => "question",
            RejectReason::Url => "url",
            RejectReason::TooShort => "too_short",
            RejectReason::TooLong => "too_long",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Reject(RejectReason),
}

impl FilterDecision {
    pub fn is_keep(&self) -> bool {
        matches!(self, FilterDecision::Keep)
    }
}

const DOMAIN_SUFFIXES: &[&str] = &[
    ".com", ".net", ".org", ".edu", ".gov", ".io", ".info", ".biz", ".co.uk",
];

fn is_question_run(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c == '?')
}

fn looks_like_url(token: &str) -> bool {
    let t = token.to_lowercase();
    t.contains("http") || t.contains("www.") || DOMAIN_SUFFIXES.iter().any(|s| t.ends_with(s))
}

/// Apply the creation filters to one sentence. The first matching reason in
/// enum order (question, url, too_short, too_long) is reported.
pub fn filter_sentence(s: &TokenizedSentence, cfg: &FilterConfig) -> FilterDecision {
    let tokens = s.tokens();
    if cfg.reject_questions && tokens.iter().any(|t| is_question_run(t)) {
        return FilterDecision::Reject(RejectReason::Question);
    }
    if cfg.reject_urls && tokens.iter().any(|t| looks_like_url(t)) {
        return FilterDecision::Reject(RejectReason::Url);
    }
    if tokens.len() < cfg.min_tokens {
        return FilterDecision::Reject(RejectReason::TooShort);
    }
    if tokens.len() > cfg.max_tokens {
        return FilterDecision::Reject(RejectReason::TooLong);
    }
    FilterDecision::Keep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormalitySide {
    Informal,
    Formal,
}

/// Which side of the threshold a score falls on; `None` exactly at the
/// threshold (those sentences are dropped).
pub fn formality_side(score: f64, threshold: f64) -> Option<FormalitySide> {
    if score < threshold {
        Some(FormalitySide::Informal)
    } else if score > threshold {
        Some(FormalitySide::Formal)
    } else {
        None
    }
}

/// Split sentences into (informal, formal) by formality score: strictly below
/// the threshold is informal, strictly above is formal, exactly at the
/// threshold is dropped.
pub fn partition_by_formality<F>(
    sentences: &[TokenizedSentence],
    score: F,
    threshold: f64,
) -> (Vec<TokenizedSentence>, Vec<TokenizedSentence>)
where
    F: Fn(&TokenizedSentence) -> f64,
{
    let mut informal = Vec::new();
    let mut formal = Vec::new();
    for s in sentences {
        match formality_side(score(s), threshold) {
            Some(FormalitySide::Informal) => informal.push(s.clone()),
            Some(FormalitySide::Formal) => formal.push(s.clone()),
            None => {}
        }
    }
    (informal, formal)
}

/// Keep pairs whose character edit distance is strictly over `min_chars`.
pub fn subselect_by_edit_distance(
    pairs: &[(TokenizedSentence, TokenizedSentence)],
    min_chars: usize,
) -> Vec<(TokenizedSentence, TokenizedSentence)> {
    pairs
        .iter()
        .filter(|(src, rw)| char_edit_distance(src.raw(), rw.raw()) > min_chars)
        .cloned()
        .collect()
}

/// Repeat the whole list k times (k >= 1), preserving order within each copy
/// block.
pub fn upweight_duplicate<T: Clone>(examples: &[T], k: usize) -> Result<Vec<T>, CorpusError> {
    if k == 0 {
        return Err(CorpusError::ZeroDuplicationFactor);
    }
    let mut out = Vec::with_capacity(examples.len() * k);
    for _ in 0..k {
        out.extend(examples.iter().cloned());
    }
    Ok(out)
}

/// Concatenate the upweighted base set with each extra set, in argument
/// order.
pub fn assemble_training_set<T: Clone>(
    base: &[T],
    dup_factor: usize,
    extra_sets: &[&[T]],
) -> Result<Vec<T>, CorpusError> {
    let mut out = upweight_duplicate(base, dup_factor)?;
    for set in extra_sets {
        out.extend(set.iter().cloned());
    }
    Ok(out)
}

/// Descriptive statistics over a split: character edit distance between the
/// source and its first reference (mean and population std), model formality
/// means, and token-length means. The first reference feeds all reference
/// statistics (the train split has exactly one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub edit_distance_mean: f64,
    pub edit_distance_std: f64,
    pub source_formality_mean: f64,
    pub reference_formality_mean: f64,
    pub source_length_mean: f64,
    pub reference_length_mean: f64,
    pub examples: usize,
}

pub fn corpus_stats<F>(split: &CorpusSplit, score: F) -> Result<CorpusStats, CorpusError>
where
    F: Fn(&TokenizedSentence) -> f64,
{
    if split.examples.is_empty() {
        return Err(CorpusError::EmptySplit);
    }
    let n = split.examples.len() as f64;
    let mut dist_sum = 0.0;
    let mut dist_sq_sum = 0.0;
    let mut src_formality = 0.0;
    let mut ref_formality = 0.0;
    let mut src_len = 0.0;
    let mut ref_len = 0.0;
    for ex in &split.examples {
        let first_ref = ex
            .references
            .first()
            .ok_or_else(|| CorpusError::MissingReference(ex.id.clone()))?;
        let d = char_edit_distance(ex.source.raw(), first_ref.raw()) as f64;
        dist_sum += d;
        dist_sq_sum += d * d;
        src_formality += score(&ex.source);
        ref_formality += score(first_ref);
        src_len += ex.source.tokens().len() as f64;
        ref_len += first_ref.tokens().len() as f64;
    }
    let mean = dist_sum / n;
    let variance = (dist_sq_sum / n - mean * mean).max(0.0);
    Ok(CorpusStats {
        edit_distance_mean: mean,
        edit_distance_std: libm::sqrt(variance),
        source_formality_mean: src_formality / n,
        reference_formality_mean: ref_formality / n,
        source_length_mean: src_len / n,
        reference_length_mean: ref_len / n,
        examples: split.examples.len(),
    })
}
