//! Back-off n-gram language model with interpolated Kneser-Ney smoothing
//! (fixed 0.75 discount) and a Witten-Bell fallback, plus the two consumers:
//! Moore-Lewis cross-entropy-difference data selection and the calibrated
//! fluency proxy.
//!
//! Sentences are padded with `<s>`/`</s>` internally; out-of-vocabulary
//! tokens map to a single `<unk>` type carrying count-1 probability mass.
//! Probabilities and backoff weights are stored as log10, matching the ARPA
//! text format the model serializes to and from.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

use crate::text::TokenizedSentence;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

const UNK_ID: u32 = 0;
const BOS_ID: u32 = 1;
const EOS_ID: u32 = 2;

/// Fixed Kneser-Ney discount; no discount estimation is attempted, which
/// keeps tiny-corpus behavior fully defined.
pub const KN_DISCOUNT: f64 = 0.75;

const LOG10_BOS_PROB: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    KneserNey,
    WittenBell,
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::KneserNey => f.write_str("kneser_ney"),
            Smoothing::WittenBell => f.write_str("witten_bell"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LmError {
    EmptyCorpus,
    ZeroOrder,
    EmptySentence,
    DegenerateCalibration,
    ArpaFormat { line: usize, message: String },
}

impl fmt::Display for LmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LmError::EmptyCorpus => f.write_str("training corpus has no non-empty sentences"),
            LmError::ZeroOrder => f.write_str("model order must be >= 1"),
            LmError::EmptySentence => f.write_str("cannot score an empty sentence"),
            LmError::DegenerateCalibration => {
                f.write_str("calibration corpus has no entropy spread between the 10th and 90th percentiles")
            }
            LmError::ArpaFormat { line, message } => write!(f, "ARPA parse error at line {line}: {message}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    fn with_specials() -> Self {
        let mut v = Vocab::default();
        for special in [UNK, BOS, EOS] {
            v.intern(special);
        }
        v
    }

    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    fn lookup(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }
}

/// Raw n-gram counts over a padded corpus. Exposed so tests and diagnostics
/// can check the counting layer independently of smoothing.
#[derive(Debug, Clone)]
pub struct NgramCounts {
    order: usize,
    vocab: Vocab,
    tables: Vec<HashMap<Vec<u32>, u64>>,
}

impl NgramCounts {
    pub fn from_corpus(corpus: &[TokenizedSentence], order: usize) -> Result<Self, LmError> {
        if order == 0 {
            return Err(LmError::ZeroOrder);
        }
        let mut vocab = Vocab::with_specials();
        let mut tables: Vec<HashMap<Vec<u32>, u64>> = alloc::vec![HashMap::new(); order];
        let mut non_empty = 0usize;
        for sentence in corpus {
            if sentence.is_empty() {
                continue;
            }
            non_empty += 1;
            let mut ids = Vec::with_capacity(sentence.tokens().len() + 2);
            ids.push(BOS_ID);
            for tok in sentence.tokens() {
                ids.push(vocab.intern(tok));
            }
            ids.push(EOS_ID);
            for k in 1..=order {
                if ids.len() < k {
                    continue;
                }
                for window in ids.windows(k) {
                    *tables[k - 1].entry(window.to_vec()).or_insert(0) += 1;
                }
            }
        }
        if non_empty == 0 {
            return Err(LmError::EmptyCorpus);
        }
        Ok(NgramCounts { order, vocab, tables })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Raw count of an n-gram given as tokens; 0 for unknown words or unseen
    /// grams.
    pub fn count(&self, ngram: &[&str]) -> u64 {
        if ngram.is_empty() || ngram.len() > self.order {
            return 0;
        }
        let ids: Option<Vec<u32>> = ngram
            .iter()
            .map(|t| match *t {
                BOS => Some(BOS_ID),
                EOS => Some(EOS_ID),
                UNK => Some(UNK_ID),
                w => self.vocab.ids.get(w).copied(),
            })
            .collect();
        match ids {
            Some(key) => self.tables[key.len() - 1].get(&key).copied().unwrap_or(0),
            None => 0,
        }
    }

    /// Total tokens counted at the unigram level, excluding `<s>`.
    pub fn token_total(&self) -> u64 {
        self.tables[0]
            .iter()
            .filter(|(k, _)| k[0] != BOS_ID)
            .map(|(_, &c)| c)
            .sum()
    }
}

/// Back-off n-gram model: log10 probability and backoff tables per order.
#[derive(Debug, Clone)]
pub struct NgramLanguageModel {
    order: usize,
    vocab: Vocab,
    smoothing: Smoothing,
    probs: Vec<HashMap<Vec<u32>, f64>>,
    backoffs: Vec<HashMap<Vec<u32>, f64>>,
}

/// Train a model with the requested smoothing. Kneser-Ney falls back to
/// Witten-Bell automatically when some order has no observed n-grams at all
/// (e.g. order 5 over a corpus of two-token sentences), where continuation
/// counts degenerate.
pub fn train_lm(
    corpus: &[TokenizedSentence],
    order: usize,
    smoothing: Smoothing,
) -> Result<NgramLanguageModel, LmError> {
    let counts = NgramCounts::from_corpus(corpus, order)?;
    build_model(&counts, smoothing)
}

/// Build a model from precomputed counts.
pub fn build_model(counts: &NgramCounts, requested: Smoothing) -> Result<NgramLanguageModel, LmError> {
    let order = counts.order;
    let degenerate = counts.tables.iter().any(|t| t.is_empty());
    let smoothing = match requested {
        Smoothing::KneserNey if degenerate => Smoothing::WittenBell,
        other => other,
    };

    // Effective counts per level: raw at the top (and everywhere for
    // Witten-Bell); Kneser-Ney lower levels use left-continuation type counts
    // except for grams starting with <s>, which cannot be left-extended.
    let mut level_counts: Vec<HashMap<Vec<u32>, u64>> = Vec::with_capacity(order);
    for k in 1..=order {
        let table = if smoothing == Smoothing::WittenBell || k == order {
            counts.tables[k - 1].clone()
        } else {
            let mut adjusted: HashMap<Vec<u32>, u64> = HashMap::new();
            for longer in counts.tables[k].keys() {
                *adjusted.entry(longer[1..].to_vec()).or_insert(0) += 1;
            }
            for (gram, &raw) in &counts.tables[k - 1] {
                if gram[0] == BOS_ID {
                    adjusted.insert(gram.clone(), raw);
                } else {
                    adjusted.entry(gram.clone()).or_insert(0);
                }
            }
            adjusted.retain(|_, c| *c > 0);
            adjusted
        };
        level_counts.push(table);
    }
    // single unknown type with count-1 mass at the unigram level
    level_counts[0].insert(alloc::vec![UNK_ID], 1);
    level_counts[0].remove(&alloc::vec![BOS_ID]);

    // Predicted alphabet: everything with unigram mass (words, </s>, <unk>).
    let alphabet: Vec<u32> = {
        let mut ids: Vec<u32> = level_counts[0].keys().map(|k| k[0]).collect();
        ids.sort_unstable();
        ids
    };
    let alphabet_size = alphabet.len() as f64;

    let mut probs: Vec<HashMap<Vec<u32>, f64>> = alloc::vec![HashMap::new(); order];
    let mut backoffs: Vec<HashMap<Vec<u32>, f64>> = alloc::vec![HashMap::new(); order.saturating_sub(1)];

    // Unigram level interpolates with the uniform distribution over the
    // alphabet.
    {
        let c_total: u64 = level_counts[0].values().sum();
        let n_types = level_counts[0].len() as f64;
        let c_total = c_total as f64;
        for (gram, &c) in &level_counts[0] {
            let c = c as f64;
            let p = match smoothing {
                Smoothing::KneserNey => {
                    let discounted = (c - KN_DISCOUNT).max(0.0) / c_total;
                    let lambda = KN_DISCOUNT * n_types / c_total;
                    discounted + lambda / alphabet_size
                }
                Smoothing::WittenBell => (c + n_types / alphabet_size) / (c_total + n_types),
            };
            probs[0].insert(gram.clone(), libm::log10(p));
        }
        probs[0].insert(alloc::vec![BOS_ID], LOG10_BOS_PROB);
    }

    for k in 2..=order {
        // Group level-k grams by context.
        struct Ctx {
            denom: f64,
            types: f64,
        }
        let mut contexts: HashMap<&[u32], Ctx> = HashMap::new();
        for (gram, &c) in &level_counts[k - 1] {
            let ctx = &gram[..k - 1];
            let e = contexts.entry(ctx).or_insert(Ctx { denom: 0.0, types: 0.0 });
            e.denom += c as f64;
            e.types += 1.0;
        }
        let mut level_probs: HashMap<Vec<u32>, f64> = HashMap::new();
        let mut level_backoffs: HashMap<Vec<u32>, f64> = HashMap::new();
        for (gram, &c) in &level_counts[k - 1] {
            let ctx = &gram[..k - 1];
            let info = &contexts[ctx];
            let lower_key = gram[1..].to_vec();
            let lower_p = libm::pow(10.0, probs[k - 2][&lower_key]);
            let c = c as f64;
            let p = match smoothing {
                Smoothing::KneserNey => {
                    let lambda = KN_DISCOUNT * info.types / info.denom;
                    (c - KN_DISCOUNT).max(0.0) / info.denom + lambda * lower_p
                }
                Smoothing::WittenBell => {
                    (c + info.types * lower_p) / (info.denom + info.types)
                }
            };
            level_probs.insert(gram.clone(), libm::log10(p));
        }
        for (ctx, info) in contexts {
            let lambda = match smoothing {
                Smoothing::KneserNey => KN_DISCOUNT * info.types / info.denom,
                Smoothing::WittenBell => info.types / (info.denom + info.types),
            };
            level_backoffs.insert(ctx.to_vec(), libm::log10(lambda));
        }
        probs[k - 1] = level_probs;
        backoffs[k - 2] = level_backoffs;
    }

    Ok(NgramLanguageModel {
        order,
        vocab: counts.vocab.clone(),
        smoothing,
        probs,
        backoffs,
    })
}

impl NgramLanguageModel {
    pub fn order(&self) -> usize {
        self.order
    }

    /// The smoothing actually used (reflects the Witten-Bell fallback).
    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Number of entries per order, as reported in the ARPA header.
    pub fn ngram_counts(&self) -> Vec<usize> {
        self.probs.iter().map(|t| t.len()).collect()
    }

    /// Predicted alphabet size: word types plus `</s>` and `<unk>`.
    pub fn alphabet_len(&self) -> usize {
        self.probs[0].len().saturating_sub(1) // minus <s>
    }

    fn lookup_id(&self, token: &str) -> u32 {
        self.vocab.lookup(token)
    }

    fn log10_cond(&self, context: &[u32], word: u32) -> f64 {
        let max_ctx = (self.order - 1).min(context.len());
        let ctx = &context[context.len() - max_ctx..];
        self.log10_backoff_walk(ctx, word)
    }

    fn log10_backoff_walk(&self, ctx: &[u32], word: u32) -> f64 {
        let mut key = Vec::with_capacity(ctx.len() + 1);
        key.extend_from_slice(ctx);
        key.push(word);
        if let Some(&logp) = self.probs[ctx.len()].get(&key) {
            return logp;
        }
        if ctx.is_empty() {
            // every queryable id has a unigram entry; <unk> is the floor
            return self.probs[0]
                .get([UNK_ID].as_slice())
                .copied()
                .unwrap_or(LOG10_BOS_PROB);
        }
        let bow = self.backoffs[ctx.len() - 1].get(ctx).copied().unwrap_or(0.0);
        bow + self.log10_backoff_walk(&ctx[1..], word)
    }

    /// log10 probability of `word` given a token context (longest usable
    /// suffix is taken automatically).
    pub fn log10_prob(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|t| self.lookup_id(t)).collect();
        self.log10_cond(&ctx, self.lookup_id(word))
    }

    /// Conditional distribution sanity hook: p(word | context) in linear
    /// space.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        libm::pow(10.0, self.log10_prob(context, word))
    }

    /// All tokens the model can predict (excludes `<s>`).
    pub fn predicted_tokens(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.probs[0]
            .keys()
            .filter(|k| k[0] != BOS_ID)
            .map(|k| self.vocab.word(k[0]))
            .collect();
        out.sort_unstable();
        out
    }

    /// Cross-entropy of a sentence in bits per token, end marker included:
    /// -(1/T) * sum log2 p(token | context) with T = token count + 1.
    pub fn cross_entropy(&self, s: &TokenizedSentence) -> Result<f64, LmError> {
        if s.is_empty() {
            return Err(LmError::EmptySentence);
        }
        let mut history: Vec<u32> = alloc::vec![BOS_ID];
        let mut log10_total = 0.0;
        for tok in s.tokens() {
            let id = self.lookup_id(tok);
            log10_total += self.log10_cond(&history, id);
            history.push(id);
        }
        log10_total += self.log10_cond(&history, EOS_ID);
        let t = (s.tokens().len() + 1) as f64;
        Ok(-log10_total / (t * LOG10_2))
    }
}

const LOG10_2: f64 = core::f64::consts::LOG10_2;

/// Token-weighted corpus cross-entropy in bits per token (empty sentences are
/// skipped).
pub fn corpus_cross_entropy(model: &NgramLanguageModel, corpus: &[TokenizedSentence]) -> Result<f64, LmError> {
    let mut bits = 0.0;
    let mut tokens = 0.0;
    for s in corpus {
        if s.is_empty() {
            continue;
        }
        let t = (s.tokens().len() + 1) as f64;
        bits += model.cross_entropy(s)? * t;
        tokens += t;
    }
    if tokens == 0.0 {
        return Err(LmError::EmptyCorpus);
    }
    Ok(bits / tokens)
}

/// Held-out perplexity: 2^(bits per token).
pub fn perplexity(model: &NgramLanguageModel, corpus: &[TokenizedSentence]) -> Result<f64, LmError> {
    Ok(libm::pow(2.0, corpus_cross_entropy(model, corpus)?))
}

/// Selection rule for [`moore_lewis_select`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    /// Keep the k best (lowest) scores; ties break toward earlier pool order.
    TopK(usize),
    /// Keep every sentence with score <= threshold.
    MaxScore(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MooreLewisPick {
    pub index: usize,
    pub score: f64,
}

/// Cross-entropy difference selection: score = H_in(s) - H_out(s); lower is
/// more in-domain-like. The returned picks are a subsequence of the pool
/// (input order preserved).
pub fn moore_lewis_select(
    in_lm: &NgramLanguageModel,
    out_lm: &NgramLanguageModel,
    pool: &[TokenizedSentence],
    rule: SelectionRule,
) -> Vec<MooreLewisPick> {
    let scored: Vec<MooreLewisPick> = pool
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let score = match (in_lm.cross_entropy(s), out_lm.cross_entropy(s)) {
                (Ok(a), Ok(b)) => a - b,
                _ => 0.0, // empty sentences are domain-neutral
            };
            MooreLewisPick { index, score }
        })
        .collect();
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[a]
            .score
            .partial_cmp(&scored[b].score)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let selected: Vec<usize> = match rule {
        SelectionRule::TopK(k) => order.into_iter().take(k).collect(),
        SelectionRule::MaxScore(t) => order.into_iter().filter(|&i| scored[i].score <= t).collect(),
    };
    let mut mask = alloc::vec![false; scored.len()];
    for i in selected {
        mask[i] = true;
    }
    scored.into_iter().filter(|p| mask[p.index]).collect()
}

/// Affine-logistic calibration for the fluency proxy: the calibration
/// corpus's 10th/90th entropy percentiles map to scores 3.5/1.0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FluencyCalibration {
    pub slope: f64,
    pub midpoint: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Fit the fluency calibration on a corpus (non-empty sentences only).
pub fn calibrate_fluency(
    model: &NgramLanguageModel,
    corpus: &[TokenizedSentence],
) -> Result<FluencyCalibration, LmError> {
    let mut entropies: Vec<f64> = Vec::new();
    for s in corpus {
        if !s.is_empty() {
            entropies.push(model.cross_entropy(s)?);
        }
    }
    if entropies.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    entropies.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let e10 = percentile(&entropies, 0.10);
    let e90 = percentile(&entropies, 0.90);
    if e90 - e10 < 1e-9 {
        return Err(LmError::DegenerateCalibration);
    }
    // 4*sigmoid(-slope*(e10 - midpoint)) = 3.5 and = 1.0 at e90:
    // sigmoid args ln 7 and -ln 3.
    let ln7 = libm::log(7.0);
    let ln3 = libm::log(3.0);
    let slope = (ln7 + ln3) / (e90 - e10);
    let midpoint = e10 + ln7 / slope;
    Ok(FluencyCalibration { slope, midpoint })
}

/// Fluency proxy in [0, 4]: a logistic squash of negative cross-entropy,
/// strictly decreasing in entropy. Reports should label this column
/// "fluency (LM proxy)".
pub fn fluency_proxy(
    model: &NgramLanguageModel,
    calibration: &FluencyCalibration,
    s: &TokenizedSentence,
) -> Result<f64, LmError> {
    let entropy = model.cross_entropy(s)?;
    let x = -calibration.slope * (entropy - calibration.midpoint);
    Ok(4.0 / (1.0 + libm::exp(-x)))
}

// --- ARPA text format -------------------------------------------------------

impl NgramLanguageModel {
    /// Serialize in the ARPA text format (log10 probabilities and backoffs),
    /// n-grams sorted per section for determinism.
    pub fn to_arpa(&self) -> String {
        let mut out = String::new();
        out.push_str("\\data\\\n");
        for (i, table) in self.probs.iter().enumerate() {
            out.push_str(&format!("ngram {}={}\n", i + 1, table.len()));
        }
        for (i, table) in self.probs.iter().enumerate() {
            out.push_str(&format!("\n\\{}-grams:\n", i + 1));
            let mut entries: Vec<(Vec<&str>, f64, Option<f64>)> = table
                .iter()
                .map(|(gram, &logp)| {
                    let words: Vec<&str> = gram.iter().map(|&id| self.vocab.word(id)).collect();
                    let bow = if i + 1 < self.order {
                        self.backoffs[i].get(gram).copied()
                    } else {
                        None
                    };
                    (words, logp, bow)
                })
                .collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            for (words, logp, bow) in entries {
                match bow {
                    Some(b) => out.push_str(&format!("{:.7}\t{}\t{:.7}\n", logp, words.join(" "), b)),
                    None => out.push_str(&format!("{:.7}\t{}\n", logp, words.join(" "))),
                }
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    /// Parse an ARPA file (ours or an external tool's).
    pub fn from_arpa(text: &str) -> Result<Self, LmError> {
        let mut declared: Vec<usize> = Vec::new();
        let mut found_data = false;
        let mut vocab = Vocab::with_specials();
        let mut probs: Vec<HashMap<Vec<u32>, f64>> = Vec::new();
        let mut backoffs: Vec<HashMap<Vec<u32>, f64>> = Vec::new();
        let mut current: Option<usize> = None;

        for (no, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            let err = |message: String| LmError::ArpaFormat { line: no + 1, message };
            if line.is_empty() {
                continue;
            }
            if line == "\\data\\" {
                found_data = true;
                continue;
            }
            if line == "\\end\\" {
                break;
            }
            if let Some(rest) = line.strip_prefix("ngram ") {
                if current.is_some() {
                    return Err(err("ngram count after section start".to_string()));
                }
                let (order_s, count_s) =
                    rest.split_once('=').ok_or_else(|| err("expected ngram N=count".to_string()))?;
                let k: usize =
                    order_s.trim().parse().map_err(|_| err("bad ngram order".to_string()))?;
                let _count: usize =
                    count_s.trim().parse().map_err(|_| err("bad ngram count".to_string()))?;
                if k != declared.len() + 1 {
                    return Err(err("ngram orders out of sequence".to_string()));
                }
                declared.push(_count);
                continue;
            }
            if let Some(section) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
                if !found_data || declared.is_empty() {
                    return Err(err("section before \\data\\ header".to_string()));
                }
                if probs.is_empty() {
                    probs = alloc::vec![HashMap::new(); declared.len()];
                    backoffs = alloc::vec![HashMap::new(); declared.len().saturating_sub(1)];
                }
                let k: usize = section.parse().map_err(|_| err("bad section header".to_string()))?;
                if k == 0 || k > declared.len() {
                    return Err(err("section order out of range".to_string()));
                }
                current = Some(k);
                continue;
            }
            let Some(k) = current else {
                return Err(err(format!("unexpected line outside any section: {line}")));
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != k + 1 && fields.len() != k + 2 {
                return Err(err(format!(
                    "expected {} or {} fields, got {}",
                    k + 1,
                    k + 2,
                    fields.len()
                )));
            }
            let logp: f64 =
                fields[0].parse().map_err(|_| err("bad log probability".to_string()))?;
            let gram: Vec<u32> = fields[1..=k].iter().map(|t| vocab.intern(t)).collect();
            if fields.len() == k + 2 {
                let bow: f64 =
                    fields[k + 1].parse().map_err(|_| err("bad backoff weight".to_string()))?;
                if k < declared.len() {
                    backoffs[k - 1].insert(gram.clone(), bow);
                }
            }
            probs[k - 1].insert(gram, logp);
        }
        if probs.is_empty() || probs[0].is_empty() {
            return Err(LmError::ArpaFormat {
                line: 0,
                message: "no unigram entries".to_string(),
            });
        }
        Ok(NgramLanguageModel {
            order: declared.len(),
            vocab,
            smoothing: Smoothing::KneserNey, // unknown for external files; irrelevant for queries
            probs,
            backoffs,
        })
    }
}
