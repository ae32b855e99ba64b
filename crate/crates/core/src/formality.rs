//! Trainable sentence-formality scorer on the -3..+3 scale.
//!
//! A deliberately small model: surface lexical features (case, punctuation,
//! contraction/slang/swear lexicon hits, length, terminal punctuation) plus
//! hashed character trigrams, fit with ridge-regularized least squares by
//! full-batch gradient descent. Training standardizes features internally and
//! folds the standardization back into the stored weights, so the model file
//! is just a weight vector. The scorer only has to order sentences by
//! formality (thresholding and ranking); absolute calibration is not a goal.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use crate::rules::RuleLexicons;
use crate::text::TokenizedSentence;
use crate::util::fnv1a64;

/// Identifier of the feature layout below. Models refuse vectors built by a
/// different layout.
pub const FEATURE_SPEC_VERSION: &str = "fx1";

/// Number of dense (named) features.
pub const DENSE_DIM: usize = 13;

/// Hash buckets for character trigrams.
pub const TRIGRAM_BUCKETS: u32 = 1 << 16;

// Dense feature indexes.
const F_ALL_CAPS_FRAC: usize = 0;
const F_CAP_INITIAL_FRAC: usize = 1;
const F_PUNCT_RUN_COUNT: usize = 2;
const F_CONTRACTION_COUNT: usize = 3;
const F_SLANG_COUNT: usize = 4;
const F_SWEAR_COUNT: usize = 5;
const F_MEAN_WORD_LEN: usize = 6;
const F_TOKEN_COUNT: usize = 7;
const F_TERMINAL_PERIOD: usize = 8;
const F_TERMINAL_QUESTION: usize = 9;
const F_TERMINAL_EXCLAIM: usize = 10;
const F_TERMINAL_OTHER_PUNCT: usize = 11;
const F_TERMINAL_WORD: usize = 12;

/// Sparse feature vector: fixed dense block plus hashed trigram buckets
/// (bucket -> count / total trigrams), sorted by bucket id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub version: String,
    pub dense: [f64; DENSE_DIM],
    pub trigrams: Vec<(u32, f64)>,
}

/// Extracts [`FeatureVector`]s; borrows the lexicons the count features need.
pub struct FeatureExtractor<'a> {
    lexicons: &'a RuleLexicons,
}

fn is_word_token(t: &str) -> bool {
    t.chars().any(|c| c.is_alphanumeric())
}

fn has_punct_run(t: &str) -> bool {
    let mut run = 0usize;
    for c in t.chars() {
        if !c.is_alphanumeric() && !c.is_whitespace() {
            run += 1;
            if run >= 2 {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(lexicons: &'a RuleLexicons) -> Self {
        FeatureExtractor { lexicons }
    }

    pub fn extract(&self, s: &TokenizedSentence) -> FeatureVector {
        let mut dense = [0.0; DENSE_DIM];
        let tokens = s.tokens();
        let words: Vec<&String> = tokens.iter().filter(|t| is_word_token(t)).collect();

        if !words.is_empty() {
            let n_words = words.len() as f64;
            let all_caps = words.iter().filter(|t| crate::rules::is_all_caps_word(t)).count();
            let cap_initial = words
                .iter()
                .filter(|t| t.chars().find(|c| c.is_alphabetic()).is_some_and(|c| c.is_uppercase()))
                .count();
            dense[F_ALL_CAPS_FRAC] = all_caps as f64 / n_words;
            dense[F_CAP_INITIAL_FRAC] = cap_initial as f64 / n_words;
            dense[F_MEAN_WORD_LEN] =
                words.iter().map(|t| t.chars().count() as f64).sum::<f64>() / n_words;
        }
        dense[F_PUNCT_RUN_COUNT] = tokens.iter().filter(|t| has_punct_run(t)).count() as f64;
        dense[F_CONTRACTION_COUNT] =
            tokens.iter().filter(|t| self.lexicons.is_contraction(t)).count() as f64;
        dense[F_SLANG_COUNT] = tokens.iter().filter(|t| self.lexicons.is_slang(t)).count() as f64;
        dense[F_SWEAR_COUNT] = tokens.iter().filter(|t| self.lexicons.is_swear(t)).count() as f64;
        dense[F_TOKEN_COUNT] = tokens.len() as f64;

        if let Some(last) = tokens.last() {
            let class = match last.chars().last() {
                Some('.') => F_TERMINAL_PERIOD,
                Some('?') => F_TERMINAL_QUESTION,
                Some('!') => F_TERMINAL_EXCLAIM,
                Some(c) if !c.is_alphanumeric() => F_TERMINAL_OTHER_PUNCT,
                _ => F_TERMINAL_WORD,
            };
            dense[class] = 1.0;
        }

        FeatureVector {
            version: FEATURE_SPEC_VERSION.to_string(),
            dense,
            trigrams: hash_trigrams(s.raw()),
        }
    }
}

fn hash_trigrams(raw: &str) -> Vec<(u32, f64)> {
    let chars: Vec<char> = raw.to_lowercase().chars().collect();
    if chars.len() < 3 {
        return Vec::new();
    }
    let mut counts: HashMap<u32, u32> = HashMap::new();
    let total = (chars.len() - 2) as f64;
    let mut buf = [0u8; 12];
    for w in chars.windows(3) {
        let mut len = 0;
        for c in w {
            len += c.encode_utf8(&mut buf[len..]).len();
        }
        let bucket = (fnv1a64(&buf[..len]) % TRIGRAM_BUCKETS as u64) as u32;
        *counts.entry(bucket).or_insert(0) += 1;
    }
    let mut out: Vec<(u32, f64)> =
        counts.into_iter().map(|(b, c)| (b, c as f64 / total)).collect();
    out.sort_unstable_by_key(|(b, _)| *b);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormalityError {
    EmptyTrainingSet,
    NonFiniteLabel(usize),
    FeatureSpecMismatch { model: String, vector: String },
}

impl fmt::Display for FormalityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormalityError::EmptyTrainingSet => f.write_str("training set is empty"),
            FormalityError::NonFiniteLabel(i) => write!(f, "label {i} is not finite"),
            FormalityError::FeatureSpecMismatch { model, vector } => {
                write!(f, "feature spec mismatch: model={model:?}, vector={vector:?}")
            }
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { learning_rate: 0.5, epochs: 300, l2: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub examples: usize,
    pub epochs_run: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub final_loss: f64,
}

/// Linear formality model: predictions are `clamp(w . x + b, -3, 3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFormalityModel {
    pub feature_spec_version: String,
    pub bias: f64,
    pub dense_weights: Vec<f64>,
    /// Sorted (bucket, weight) pairs for the trigram block.
    pub trigram_weights: Vec<(u32, f64)>,
    pub training_meta: TrainingMeta,
}

impl LinearFormalityModel {
    fn check_version(&self, fv: &FeatureVector) -> Result<(), FormalityError> {
        if fv.version != self.feature_spec_version {
            return Err(FormalityError::FeatureSpecMismatch {
                model: self.feature_spec_version.clone(),
                vector: fv.version.clone(),
            });
        }
        Ok(())
    }

    /// Unclamped linear score.
    pub fn raw_score(&self, fv: &FeatureVector) -> Result<f64, FormalityError> {
        self.check_version(fv)?;
        let mut score = self.bias;
        for (i, w) in self.dense_weights.iter().enumerate() {
            score += w * fv.dense[i];
        }
        for &(bucket, value) in &fv.trigrams {
            if let Ok(pos) = self.trigram_weights.binary_search_by_key(&bucket, |(b, _)| *b) {
                score += self.trigram_weights[pos].1 * value;
            }
        }
        Ok(score)
    }

    /// Score clamped to the annotation scale [-3, 3].
    pub fn predict(&self, fv: &FeatureVector) -> Result<f64, FormalityError> {
        Ok(self.raw_score(fv)?.clamp(-3.0, 3.0))
    }
}

/// Bundle of extractor + model, for call sites that score sentences directly.
pub struct FormalityScorer<'a> {
    extractor: FeatureExtractor<'a>,
    model: &'a LinearFormalityModel,
}

impl<'a> FormalityScorer<'a> {
    pub fn new(lexicons: &'a RuleLexicons, model: &'a LinearFormalityModel) -> Self {
        FormalityScorer { extractor: FeatureExtractor::new(lexicons), model }
    }

    /// The extractor always produces the current feature-spec version, so a
    /// version mismatch is a construction error, not a per-call one.
    pub fn score(&self, s: &TokenizedSentence) -> f64 {
        self.model
            .predict(&self.extractor.extract(s))
            .expect("scorer constructed with matching feature spec")
    }

    pub fn model(&self) -> &LinearFormalityModel {
        self.model
    }
}

/// Fit a ridge regression by full-batch gradient descent. Deterministic;
/// the per-epoch loss is non-increasing (the step is retried at a halved
/// learning rate whenever it would overshoot). Constant-label inputs yield a
/// bias-only model because features are centered during training.
pub fn train_formality(
    examples: &[(FeatureVector, f64)],
    opts: &TrainOptions,
) -> Result<LinearFormalityModel, FormalityError> {
    if examples.is_empty() {
        return Err(FormalityError::EmptyTrainingSet);
    }
    for (i, (_, y)) in examples.iter().enumerate() {
        if !y.is_finite() {
            return Err(FormalityError::NonFiniteLabel(i));
        }
    }
    let n = examples.len() as f64;

    // Bucket slots present in the training data, in sorted order.
    let mut bucket_ids: Vec<u32> = Vec::new();
    for (fv, _) in examples {
        for &(b, _) in &fv.trigrams {
            bucket_ids.push(b);
        }
    }
    bucket_ids.sort_unstable();
    bucket_ids.dedup();
    let slot_of: HashMap<u32, usize> =
        bucket_ids.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let n_buckets = bucket_ids.len();

    // Standardization statistics: dense features get (mean, std); trigram
    // buckets are centered only (their values are already in [0, 1]).
    let mut dense_mean = [0.0; DENSE_DIM];
    let mut dense_sq = [0.0; DENSE_DIM];
    let mut bucket_mean = alloc::vec![0.0; n_buckets];
    for (fv, _) in examples {
        for i in 0..DENSE_DIM {
            dense_mean[i] += fv.dense[i];
            dense_sq[i] += fv.dense[i] * fv.dense[i];
        }
        for &(b, v) in &fv.trigrams {
            bucket_mean[slot_of[&b]] += v;
        }
    }
    let mut dense_std = [1.0; DENSE_DIM];
    for i in 0..DENSE_DIM {
        dense_mean[i] /= n;
        let var = (dense_sq[i] / n - dense_mean[i] * dense_mean[i]).max(0.0);
        let std = libm::sqrt(var);
        dense_std[i] = if std > 1e-12 { std } else { 1.0 };
    }
    for m in bucket_mean.iter_mut() {
        *m /= n;
    }

    // Precompute standardized rows once.
    struct Row {
        dense: [f64; DENSE_DIM],
        trigrams: Vec<(usize, f64)>,
        y: f64,
    }
    let rows: Vec<Row> = examples
        .iter()
        .map(|(fv, y)| {
            let mut d = [0.0; DENSE_DIM];
            for i in 0..DENSE_DIM {
                d[i] = (fv.dense[i] - dense_mean[i]) / dense_std[i];
            }
            Row {
                dense: d,
                trigrams: fv.trigrams.iter().map(|&(b, v)| (slot_of[&b], v)).collect(),
                y: *y,
            }
        })
        .collect();

    let mut w_dense = [0.0; DENSE_DIM];
    let mut w_bucket = alloc::vec![0.0; n_buckets];
    let mut bias = 0.0;
    let mut lr = opts.learning_rate;
    let mut prev_loss = f64::INFINITY;
    let mut epochs_run = 0;

    // Loss/gradient at given weights. Bucket features are centered through
    // the identity w.(x - mu) = w.x - w.mu, so the sparse layout survives:
    // grad_j = (1/N) sum_r err_r (x_rj - mu_j)
    //        = (1/N) sum_{r: j present} err_r x_rj - mu_j * mean(err).
    let eval = |w_dense: &[f64; DENSE_DIM], w_bucket: &[f64], bias: f64| {
        let w_dot_mu: f64 =
            w_bucket.iter().zip(bucket_mean.iter()).map(|(w, m)| w * m).sum();
        let mut grad_dense = [0.0; DENSE_DIM];
        let mut grad_bucket = alloc::vec![0.0; w_bucket.len()];
        let mut err_sum = 0.0;
        let mut loss = 0.0;
        for row in &rows {
            let mut pred = bias - w_dot_mu;
            for i in 0..DENSE_DIM {
                pred += w_dense[i] * row.dense[i];
            }
            for &(slot, v) in &row.trigrams {
                pred += w_bucket[slot] * v;
            }
            let err = pred - row.y;
            loss += err * err;
            err_sum += err;
            for i in 0..DENSE_DIM {
                grad_dense[i] += err * row.dense[i];
            }
            for &(slot, v) in &row.trigrams {
                grad_bucket[slot] += err * v;
            }
        }
        loss /= 2.0 * n;
        let grad_bias = err_sum / n;
        for g in grad_dense.iter_mut() {
            *g /= n;
        }
        for (g, m) in grad_bucket.iter_mut().zip(bucket_mean.iter()) {
            *g = *g / n - m * grad_bias;
        }
        for i in 0..DENSE_DIM {
            loss += 0.5 * opts.l2 * w_dense[i] * w_dense[i];
            grad_dense[i] += opts.l2 * w_dense[i];
        }
        for (g, w) in grad_bucket.iter_mut().zip(w_bucket.iter()) {
            loss += 0.5 * opts.l2 * w * w;
            *g += opts.l2 * w;
        }
        (loss, grad_dense, grad_bucket, grad_bias)
    };

    'training: for _ in 0..opts.epochs {
        let (loss, grad_dense, grad_bucket, grad_bias) = eval(&w_dense, &w_bucket, bias);
        prev_loss = loss;
        // Halve the step until it does not overshoot, so the per-epoch loss
        // curve is non-increasing; stop training once no step helps.
        loop {
            if lr < 1e-12 {
                break 'training;
            }
            let mut cand_dense = w_dense;
            let mut cand_bucket = w_bucket.clone();
            for i in 0..DENSE_DIM {
                cand_dense[i] -= lr * grad_dense[i];
            }
            for (wc, g) in cand_bucket.iter_mut().zip(grad_bucket.iter()) {
                *wc -= lr * g;
            }
            let cand_bias = bias - lr * grad_bias;
            let (cand_loss, _, _, _) = eval(&cand_dense, &cand_bucket, cand_bias);
            if cand_loss <= loss {
                w_dense = cand_dense;
                w_bucket = cand_bucket;
                bias = cand_bias;
                prev_loss = cand_loss;
                break;
            }
            lr *= 0.5;
        }
        epochs_run += 1;
    }

    // Fold standardization back: w'_i = w_i / std_i,
    // b' = b - sum_i w_i mean_i / std_i - sum_j w_j mean_j.
    let mut out_dense = Vec::with_capacity(DENSE_DIM);
    let mut out_bias = bias;
    for i in 0..DENSE_DIM {
        let w = w_dense[i] / dense_std[i];
        out_dense.push(w);
        out_bias -= w * dense_mean[i];
    }
    let mut out_trigram: Vec<(u32, f64)> = Vec::with_capacity(n_buckets);
    for (slot, &b) in bucket_ids.iter().enumerate() {
        out_bias -= w_bucket[slot] * bucket_mean[slot];
        if w_bucket[slot] != 0.0 {
            out_trigram.push((b, w_bucket[slot]));
        }
    }

    Ok(LinearFormalityModel {
        feature_spec_version: FEATURE_SPEC_VERSION.to_string(),
        bias: out_bias,
        dense_weights: out_dense,
        trigram_weights: out_trigram,
        training_meta: TrainingMeta {
            examples: examples.len(),
            epochs_run,
            learning_rate: opts.learning_rate,
            l2: opts.l2,
            final_loss: prev_loss,
        },
    })
}
