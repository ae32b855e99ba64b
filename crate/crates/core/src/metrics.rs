//! Automatic evaluation: BLEU, PINC, TER, the lexical meaning proxy, combined
//! scoring, overall ranking from human judgments, Spearman rank
//! correlation, and paired-bootstrap significance.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use hashbrown::{HashMap, HashSet};
use serde::{Deserialize, Serialize};

use crate::text::levenshtein;
use crate::util::{next_index, stream_rng};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricError {
    LengthMismatch { left: usize, right: usize },
    EmptyInput,
    EmptyCandidate,
    EmptyReference,
    /// Spearman is undefined when either side is constant.
    ConstantInput,
    OutOfRange { axis: &'static str, value: f64 },
    ValueOutOfScale { criterion: Criterion, value: f64 },
    InconsistentSystems { sentence_id: String, judge_id: String },
    NoOverlap,
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            MetricError::EmptyInput => f.write_str("input is empty"),
            MetricError::EmptyCandidate => f.write_str("candidate sentence is empty"),
            MetricError::EmptyReference => f.write_str("reference sentence is empty"),
            MetricError::ConstantInput => f.write_str("correlation undefined for constant input"),
            MetricError::OutOfRange { axis, value } => {
                write!(f, "{axis} value {value} outside its declared range")
            }
            MetricError::ValueOutOfScale { criterion, value } => {
                write!(f, "{criterion:?} judgment {value} outside its scale")
            }
            MetricError::InconsistentSystems { sentence_id, judge_id } => {
                write!(f, "judge {judge_id:?} ranks a different system set on sentence {sentence_id:?}")
            }
            MetricError::NoOverlap => f.write_str("no overlapping ids between scores and judgments"),
        }
    }
}

// --- n-gram precision machinery ---------------------------------------------

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut map: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *map.entry(w).or_insert(0) += 1;
        }
    }
    map
}

/// Clipped matches and total candidate n-grams of one order for one sentence.
fn clipped_matches(candidate: &[String], refs: &[Vec<String>], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let total: usize = cand.values().sum();
    if total == 0 {
        return (0, 0);
    }
    let ref_counts: Vec<HashMap<&[String], usize>> =
        refs.iter().map(|r| ngram_counts(r, n)).collect();
    let mut matches = 0;
    for (gram, &count) in &cand {
        let clip = ref_counts.iter().map(|rc| rc.get(gram).copied().unwrap_or(0)).max().unwrap_or(0);
        matches += count.min(clip);
    }
    (matches, total)
}

fn closest_ref_len(candidate_len: usize, refs: &[Vec<String>]) -> usize {
    let mut best = refs[0].len();
    for r in refs.iter().skip(1) {
        let len = r.len();
        let (d_new, d_best) = (
            (len as i64 - candidate_len as i64).abs(),
            (best as i64 - candidate_len as i64).abs(),
        );
        if d_new < d_best || (d_new == d_best && len < best) {
            best = len;
        }
    }
    best
}

/// Corpus-level BLEU in [0, 100]: geometric mean of clipped modified n-gram
/// precisions (orders where the candidates have n-grams) times the brevity
/// penalty computed from closest reference lengths (ties break toward the
/// shorter reference). No smoothing.
pub fn corpus_bleu(
    candidates: &[Vec<String>],
    references: &[Vec<Vec<String>>],
    max_n: usize,
) -> Result<f64, MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch { left: candidates.len(), right: references.len() });
    }
    if candidates.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if references.iter().any(|r| r.is_empty()) {
        return Err(MetricError::EmptyReference);
    }
    let mut matches = alloc::vec![0usize; max_n];
    let mut totals = alloc::vec![0usize; max_n];
    let mut cand_len = 0usize;
    let mut ref_len = 0usize;
    for (cand, refs) in candidates.iter().zip(references.iter()) {
        cand_len += cand.len();
        ref_len += closest_ref_len(cand.len(), refs);
        for n in 1..=max_n {
            let (m, t) = clipped_matches(cand, refs, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    if cand_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for n in 0..max_n {
        if totals[n] == 0 {
            continue;
        }
        if matches[n] == 0 {
            return Ok(0.0);
        }
        log_sum += libm::log(matches[n] as f64 / totals[n] as f64);
        used += 1;
    }
    if used == 0 {
        return Ok(0.0);
    }
    let bp = if cand_len < ref_len {
        libm::exp(1.0 - ref_len as f64 / cand_len as f64)
    } else {
        1.0
    };
    Ok(100.0 * bp * libm::exp(log_sum / used as f64))
}

/// Sentence-level BLEU with add-one smoothing on orders >= 2, for
/// per-sentence breakdowns and correlation against per-sentence judgments.
pub fn sentence_bleu(candidate: &[String], refs: &[Vec<String>], max_n: usize) -> f64 {
    if refs.is_empty() || candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for n in 1..=max_n {
        let (m, t) = clipped_matches(candidate, refs, n);
        if t == 0 {
            continue;
        }
        let p = if n == 1 {
            m as f64 / t as f64
        } else {
            (m + 1) as f64 / (t + 1) as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += libm::log(p);
        used += 1;
    }
    if used == 0 {
        return 0.0;
    }
    let ref_len = closest_ref_len(candidate.len(), refs);
    let bp = if candidate.len() < ref_len {
        libm::exp(1.0 - ref_len as f64 / candidate.len() as f64)
    } else {
        1.0
    };
    100.0 * bp * libm::exp(log_sum / used as f64)
}

/// PINC in [0, 100]: mean over orders of the fraction of candidate n-grams
/// (distinct) absent from the source; orders where the candidate has no
/// n-grams are skipped. Higher means more novel wording.
pub fn pinc(source: &[String], candidate: &[String], max_n: usize) -> Result<f64, MetricError> {
    if candidate.is_empty() {
        return Err(MetricError::EmptyCandidate);
    }
    let mut acc = 0.0;
    let mut used = 0usize;
    for n in 1..=max_n {
        let cand: HashSet<&[String]> = candidate.windows(n).collect();
        if cand.is_empty() {
            continue;
        }
        let src: HashSet<&[String]> = source.windows(n).collect();
        let overlap = cand.iter().filter(|g| src.contains(*g)).count();
        acc += 1.0 - overlap as f64 / cand.len() as f64;
        used += 1;
    }
    Ok(100.0 * acc / used as f64)
}

// --- TER ---------------------------------------------------------------------

const MAX_SHIFT_LEN: usize = 10;

/// Candidates this short get the exact minimal shift search; the greedy
/// heuristic can overshoot the minimum by one on occasional tiny inputs,
/// and exactness is cheap there.
const EXACT_TER_MAX_LEN: usize = 7;

/// Edits (insertions + deletions + substitutions + block shifts) to turn
/// `candidate` into `reference`. Short candidates are solved exactly; longer
/// ones use the standard greedy heuristic (apply the block shift that most
/// reduces the remaining edit distance, repeat until no shift helps).
pub fn ter_edits(candidate: &[String], reference: &[String]) -> usize {
    if candidate.len() <= EXACT_TER_MAX_LEN {
        exact_shift_search(candidate, reference)
    } else {
        greedy_shift_search(candidate, reference)
    }
}

/// Map both sides onto small integer ids so the searches compare u32s.
fn intern_pair<'a>(candidate: &'a [String], reference: &'a [String]) -> (Vec<u32>, Vec<u32>) {
    fn intern<'a>(ids: &mut HashMap<&'a str, u32>, t: &'a str) -> u32 {
        let next = ids.len() as u32;
        *ids.entry(t).or_insert(next)
    }
    let mut ids: HashMap<&'a str, u32> = HashMap::new();
    let c: Vec<u32> = candidate.iter().map(|t| intern(&mut ids, t)).collect();
    let r: Vec<u32> = reference.iter().map(|t| intern(&mut ids, t)).collect();
    (c, r)
}

fn all_shifts(state: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for start in 0..state.len() {
        for len in 1..=state.len() - start {
            let block = &state[start..start + len];
            let mut removed: Vec<u32> = Vec::with_capacity(state.len() - len);
            removed.extend_from_slice(&state[..start]);
            removed.extend_from_slice(&state[start + len..]);
            for ins in 0..=removed.len() {
                if ins == start {
                    continue; // no-op placement
                }
                let mut shifted: Vec<u32> = Vec::with_capacity(state.len());
                shifted.extend_from_slice(&removed[..ins]);
                shifted.extend_from_slice(block);
                shifted.extend_from_slice(&removed[ins..]);
                out.push(shifted);
            }
        }
    }
    out
}

/// Uniform-cost search over shift sequences; the value of a state is
/// shifts-so-far + Levenshtein to the reference. States whose next shift
/// cannot beat the incumbent are pruned, which keeps the search tiny for the
/// short candidates it runs on.
fn exact_shift_search(candidate: &[String], reference: &[String]) -> usize {
    let (cand, r) = intern_pair(candidate, reference);
    let mut best = levenshtein(&cand, &r);
    let mut frontier: Vec<Vec<u32>> = alloc::vec![cand.clone()];
    let mut cost_of: HashMap<Vec<u32>, usize> = HashMap::new();
    cost_of.insert(cand, 0);
    let mut shifts = 0usize;
    while !frontier.is_empty() {
        shifts += 1;
        if shifts >= best {
            break;
        }
        let mut next_frontier: Vec<Vec<u32>> = Vec::new();
        for state in frontier {
            for shifted in all_shifts(&state) {
                if cost_of.get(&shifted).is_some_and(|&c| c <= shifts) {
                    continue;
                }
                let total = shifts + levenshtein(&shifted, &r);
                if total < best {
                    best = total;
                }
                cost_of.insert(shifted.clone(), shifts);
                next_frontier.push(shifted);
            }
        }
        frontier = next_frontier;
    }
    best
}

fn greedy_shift_search(candidate: &[String], reference: &[String]) -> usize {
    let (cand, r) = intern_pair(candidate, reference);
    let mut cur = cand;
    let mut shifts = 0usize;
    let mut dist = levenshtein(&cur, &r);
    while dist > 0 {
        let mut best: Option<(usize, Vec<u32>)> = None;
        for start in 0..cur.len() {
            let max_len = MAX_SHIFT_LEN.min(cur.len() - start);
            for len in 1..=max_len {
                let block = &cur[start..start + len];
                let mut removed: Vec<u32> = Vec::with_capacity(cur.len() - len);
                removed.extend_from_slice(&cur[..start]);
                removed.extend_from_slice(&cur[start + len..]);
                for ins in 0..=removed.len() {
                    if ins == start {
                        continue;
                    }
                    let mut shifted: Vec<u32> = Vec::with_capacity(cur.len());
                    shifted.extend_from_slice(&removed[..ins]);
                    shifted.extend_from_slice(block);
                    shifted.extend_from_slice(&removed[ins..]);
                    let d = levenshtein(&shifted, &r);
                    if d < dist && best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((d, shifted));
                    }
                }
            }
        }
        match best {
            Some((d, seq)) => {
                shifts += 1;
                cur = seq;
                dist = d;
            }
            None => break,
        }
    }
    shifts + dist
}

/// Translation edit rate: min over references of edits / reference length.
pub fn ter(candidate: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if references.iter().any(|r| r.is_empty()) {
        return Err(MetricError::EmptyReference);
    }
    let mut best = f64::INFINITY;
    for r in references {
        let rate = ter_edits(candidate, r) as f64 / r.len() as f64;
        if rate < best {
            best = rate;
        }
    }
    Ok(best)
}

// --- meaning proxy and combined score ----------------------------------------

fn is_punct_token(t: &str) -> bool {
    !t.is_empty() && t.chars().all(|c| !c.is_alphanumeric() && !c.is_whitespace())
}

/// Lexical meaning proxy in [1, 6]: harmonic mean of unigram precision and
/// recall over lowercased non-punctuation tokens, affinely mapped from [0, 1].
/// Reports should label this column "meaning (lexical proxy)".
pub fn meaning_proxy(source: &[String], candidate: &[String]) -> f64 {
    let content = |tokens: &[String]| -> Vec<String> {
        tokens
            .iter()
            .filter(|t| !is_punct_token(t))
            .map(|t| t.to_lowercase())
            .collect()
    };
    let src = content(source);
    let cand = content(candidate);
    let f1 = if src.is_empty() && cand.is_empty() {
        1.0
    } else if src.is_empty() || cand.is_empty() {
        0.0
    } else {
        let mut counts: HashMap<&str, i64> = HashMap::new();
        for t in &src {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        let mut overlap = 0i64;
        for t in &cand {
            if let Some(c) = counts.get_mut(t.as_str()) {
                if *c > 0 {
                    *c -= 1;
                    overlap += 1;
                }
            }
        }
        let p = overlap as f64 / cand.len() as f64;
        let r = overlap as f64 / src.len() as f64;
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    };
    1.0 + 5.0 * f1
}

/// Min/max of each evaluation axis, used to normalize the combined score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRanges {
    pub formality: (f64, f64),
    pub fluency: (f64, f64),
    pub meaning: (f64, f64),
}

impl AxisRanges {
    /// Human scales: formality -3..3, fluency 1..5, meaning 1..6.
    pub fn human() -> Self {
        AxisRanges { formality: (-3.0, 3.0), fluency: (1.0, 5.0), meaning: (1.0, 6.0) }
    }

    /// Proxy scales: the LM fluency proxy lives on 0..4.
    pub fn proxy() -> Self {
        AxisRanges { formality: (-3.0, 3.0), fluency: (0.0, 4.0), meaning: (1.0, 6.0) }
    }
}

impl Default for AxisRanges {
    fn default() -> Self {
        AxisRanges::human()
    }
}

/// Sum of min-max-normalized formality, fluency, and meaning, in [0, 3].
pub fn combined_score(
    formality: f64,
    fluency: f64,
    meaning: f64,
    ranges: &AxisRanges,
) -> Result<f64, MetricError> {
    let norm = |value: f64, (lo, hi): (f64, f64), axis: &'static str| -> Result<f64, MetricError> {
        if value < lo || value > hi {
            return Err(MetricError::OutOfRange { axis, value });
        }
        Ok((value - lo) / (hi - lo))
    };
    Ok(norm(formality, ranges.formality, "formality")?
        + norm(fluency, ranges.fluency, "fluency")?
        + norm(meaning, ranges.meaning, "meaning")?)
}

// --- judgments, overall ranking, correlation ----------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Formality,
    Fluency,
    Meaning,
    OverallRank,
}

impl Criterion {
    /// Declared value range of the criterion's annotation scale.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Criterion::Formality => (-3.0, 3.0),
            Criterion::Fluency => (1.0, 5.0),
            Criterion::Meaning => (1.0, 6.0),
            Criterion::OverallRank => (1.0, f64::INFINITY),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Criterion::Formality => "formality",
            Criterion::Fluency => "fluency",
            Criterion::Meaning => "meaning",
            Criterion::OverallRank => "overall_rank",
        };
        f.write_str(s)
    }
}

/// One human judgment of one system output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub sentence_id: String,
    pub system_id: String,
    pub judge_id: String,
    pub criterion: Criterion,
    pub value: f64,
}

impl JudgmentRecord {
    pub fn validate(&self) -> Result<(), MetricError> {
        let (lo, hi) = self.criterion.range();
        if !self.value.is_finite() || self.value < lo || self.value > hi {
            return Err(MetricError::ValueOutOfScale { criterion: self.criterion, value: self.value });
        }
        Ok(())
    }
}

/// Average ranks (1-based) of the values, ties receiving the mean of the
/// positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Overall ranking: rank(model) = (1/|S|) sum_s (1/|J_s|) sum_j
/// rank(s_model, j) over the rank judgments. Every (sentence, judge) group must rank the same system
/// set; ties within one judge's ranking get average rank. Returns per-system
/// mean ranks sorted by system id.
pub fn overall_rank(judgments: &[JudgmentRecord]) -> Result<Vec<(String, f64)>, MetricError> {
    let ranked: Vec<&JudgmentRecord> = judgments
        .iter()
        .filter(|j| j.criterion == Criterion::OverallRank)
        .collect();
    if ranked.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    for j in &ranked {
        j.validate()?;
    }
    // group by (sentence, judge)
    let mut groups: HashMap<(&str, &str), Vec<(&str, f64)>> = HashMap::new();
    for j in &ranked {
        groups
            .entry((j.sentence_id.as_str(), j.judge_id.as_str()))
            .or_default()
            .push((j.system_id.as_str(), j.value));
    }
    let mut system_set: Vec<&str> = groups.values().next().unwrap().iter().map(|(s, _)| *s).collect();
    system_set.sort_unstable();
    for ((sentence_id, judge_id), entries) in &groups {
        let mut systems: Vec<&str> = entries.iter().map(|(s, _)| *s).collect();
        systems.sort_unstable();
        if systems != system_set {
            return Err(MetricError::InconsistentSystems {
                sentence_id: sentence_id.to_string(),
                judge_id: judge_id.to_string(),
            });
        }
    }
    // per sentence: mean over judges of each system's (tie-averaged) rank
    let mut per_sentence: HashMap<&str, HashMap<&str, (f64, usize)>> = HashMap::new();
    for ((sentence_id, _judge), entries) in &groups {
        let mut sorted = entries.clone();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let values: Vec<f64> = sorted.iter().map(|(_, v)| *v).collect();
        let ranks = average_ranks(&values);
        let sys_map = per_sentence.entry(sentence_id).or_default();
        for ((system, _), rank) in sorted.iter().zip(ranks.iter()) {
            let e = sys_map.entry(system).or_insert((0.0, 0));
            e.0 += rank;
            e.1 += 1;
        }
    }
    let n_sentences = per_sentence.len() as f64;
    let mut totals: HashMap<&str, f64> = HashMap::new();
    for sys_map in per_sentence.values() {
        for (system, (sum, judges)) in sys_map {
            *totals.entry(system).or_insert(0.0) += sum / *judges as f64;
        }
    }
    let mut out: Vec<(String, f64)> = totals
        .into_iter()
        .map(|(s, total)| (s.to_string(), total / n_sentences))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Spearman rank correlation with average-rank tie handling: the Pearson
/// correlation of the two rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 2 {
        return Err(MetricError::EmptyInput);
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(ry.iter()) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(MetricError::ConstantInput);
    }
    Ok(cov / libm::sqrt(vx * vy))
}

/// Two-sided paired bootstrap p-value for the mean difference between two
/// aligned per-sentence score lists. Each resample draws its own RNG stream
/// from (seed, resample index), so the result is independent of evaluation
/// order. Uses the +1 correction: p = (hits + 1) / (resamples + 1).
pub fn paired_bootstrap(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 || resamples == 0 {
        return Err(MetricError::EmptyInput);
    }
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let observed = diffs.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = diffs.iter().map(|d| d - observed).collect();
    let mut hits = 0usize;
    for r in 0..resamples {
        let mut rng = stream_rng(seed, &(r as u64).to_le_bytes());
        let mut sum = 0.0;
        for _ in 0..n {
            sum += centered[next_index(&mut rng, n)];
        }
        let mean = sum / n as f64;
        if mean.abs() >= observed.abs() {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (resamples + 1) as f64)
}

/// Per-(sentence, system) automatic scores fed to [`correlate_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoSentenceScores {
    pub sentence_id: String,
    pub system_id: String,
    pub formality: Option<f64>,
    pub fluency: Option<f64>,
    pub meaning: Option<f64>,
    pub bleu: Option<f64>,
    pub ter: Option<f64>,
    pub pinc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub human_criterion: String,
    pub rho: f64,
    pub pairs: usize,
    /// Two-sided permutation p-value for rho != 0 (seeded, deterministic).
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct CorrelateOptions {
    pub permutation_resamples: usize,
    pub seed: u64,
}

impl Default for CorrelateOptions {
    fn default() -> Self {
        CorrelateOptions { permutation_resamples: 10_000, seed: 0 }
    }
}

fn permutation_pvalue(xs: &[f64], ys: &[f64], rho: f64, opts: &CorrelateOptions) -> f64 {
    let mut hits = 0usize;
    let mut shuffled: Vec<f64> = ys.to_vec();
    for r in 0..opts.permutation_resamples {
        let mut rng = stream_rng(opts.seed, &(r as u64 ^ 0x9e37_79b9_7f4a_7c15).to_le_bytes());
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, next_index(&mut rng, i + 1));
        }
        if let Ok(rp) = spearman(xs, &shuffled) {
            if rp.abs() >= rho.abs() {
                hits += 1;
            }
        }
    }
    (hits + 1) as f64 / (opts.permutation_resamples + 1) as f64
}

/// Correlate automatic metrics against human judgments: formality, fluency,
/// and meaning against their matching criteria; BLEU, TER, and PINC against
/// the per-(sentence, system) mean overall rank. Rows with fewer than two
/// pairs or constant values are omitted; an empty intersection is an error.
pub fn correlate_report(
    auto: &[AutoSentenceScores],
    judgments: &[JudgmentRecord],
    opts: &CorrelateOptions,
) -> Result<CorrelationReport, MetricError> {
    for j in judgments {
        j.validate()?;
    }
    // mean human value per (sentence, system, criterion)
    let mut sums: HashMap<(&str, &str, Criterion), (f64, usize)> = HashMap::new();
    for j in judgments {
        let e = sums
            .entry((j.sentence_id.as_str(), j.system_id.as_str(), j.criterion))
            .or_insert((0.0, 0));
        e.0 += j.value;
        e.1 += 1;
    }
    let mean_of = |sentence: &str, system: &str, criterion: Criterion| -> Option<f64> {
        sums.get(&(sentence, system, criterion)).map(|(s, c)| s / *c as f64)
    };

    let axes: [(&str, Criterion, fn(&AutoSentenceScores) -> Option<f64>); 6] = [
        ("formality", Criterion::Formality, |a| a.formality),
        ("fluency_lm_proxy", Criterion::Fluency, |a| a.fluency),
        ("meaning_lexical_proxy", Criterion::Meaning, |a| a.meaning),
        ("bleu", Criterion::OverallRank, |a| a.bleu),
        ("ter", Criterion::OverallRank, |a| a.ter),
        ("pinc", Criterion::OverallRank, |a| a.pinc),
    ];

    let mut rows = Vec::new();
    let mut any_overlap = false;
    for (metric, criterion, getter) in axes {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for record in auto {
            let (Some(x), Some(y)) = (
                getter(record),
                mean_of(&record.sentence_id, &record.system_id, criterion),
            ) else {
                continue;
            };
            xs.push(x);
            ys.push(y);
        }
        if !xs.is_empty() {
            any_overlap = true;
        }
        match spearman(&xs, &ys) {
            Ok(rho) => {
                let p_value = permutation_pvalue(&xs, &ys, rho, opts);
                rows.push(CorrelationRow {
                    metric: metric.to_string(),
                    human_criterion: criterion.to_string(),
                    rho,
                    pairs: xs.len(),
                    p_value,
                });
            }
            Err(_) => continue,
        }
    }
    if !any_overlap {
        return Err(MetricError::NoOverlap);
    }
    Ok(CorrelationReport { rows })
}
