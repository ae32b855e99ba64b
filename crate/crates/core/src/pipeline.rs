//! Data-augmentation regimes around a pluggable rewriter (self-training and
//! back-translation) and the end-to-end system evaluation that produces the
//! per-system score report.
//!
//! External systems participate through pre-loaded line-aligned outputs; no
//! process management happens here.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSplit;
use crate::formality::FormalityScorer;
use crate::lm::{fluency_proxy, FluencyCalibration, LmError, NgramLanguageModel};
use crate::metrics::{
    combined_score, corpus_bleu, meaning_proxy, paired_bootstrap, pinc, sentence_bleu, ter,
    AutoSentenceScores, AxisRanges, MetricError,
};
use crate::rules::{formalize, informalize, ReverseRuleProbabilities, RuleLexicons};
use crate::text::{char_edit_distance, TokenizedSentence};

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    LineCountMismatch { expected: usize, actual: usize, line: usize },
    Misaligned { system_id: String, expected: usize, actual: usize, line: usize },
    EmptyTestSet,
    MissingReference { example_id: String },
    Metric(MetricError),
    Lm(LmError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::LineCountMismatch { expected, actual, line } => write!(
                f,
                "external rewrites must align with the input: expected {expected} lines, got {actual} (first offending line {line})"
            ),
            PipelineError::Misaligned { system_id, expected, actual, line } => write!(
                f,
                "system {system_id:?} output misaligned: expected {expected} lines, got {actual} (first offending line {line})"
            ),
            PipelineError::EmptyTestSet => f.write_str("test set has no examples"),
            PipelineError::MissingReference { example_id } => {
                write!(f, "example {example_id:?} has no references")
            }
            PipelineError::Metric(e) => write!(f, "metric error: {e}"),
            PipelineError::Lm(e) => write!(f, "language model error: {e}"),
        }
    }
}

impl From<MetricError> for PipelineError {
    fn from(e: MetricError) -> Self {
        PipelineError::Metric(e)
    }
}

impl From<LmError> for PipelineError {
    fn from(e: LmError) -> Self {
        PipelineError::Lm(e)
    }
}

/// A system that rewrites sentences, order-aligned with its input.
pub trait Rewriter {
    fn rewrite_all(&self, inputs: &[TokenizedSentence]) -> Result<Vec<TokenizedSentence>, PipelineError>;
}

/// Internal rule engine, formalizing direction.
pub struct RuleFormalizer<'a> {
    pub lexicons: &'a RuleLexicons,
}

impl Rewriter for RuleFormalizer<'_> {
    fn rewrite_all(&self, inputs: &[TokenizedSentence]) -> Result<Vec<TokenizedSentence>, PipelineError> {
        Ok(inputs.iter().map(|s| formalize(s, self.lexicons)).collect())
    }
}

/// Internal rule engine, informalizing direction.
pub struct RuleInformalizer<'a> {
    pub lexicons: &'a RuleLexicons,
    pub probs: ReverseRuleProbabilities,
}

impl Rewriter for RuleInformalizer<'_> {
    fn rewrite_all(&self, inputs: &[TokenizedSentence]) -> Result<Vec<TokenizedSentence>, PipelineError> {
        Ok(inputs.iter().map(|s| informalize(s, self.lexicons, &self.probs)).collect())
    }
}

/// Pre-loaded outputs of an external system, one rewrite per input line.
pub struct PreloadedRewrites {
    pub lines: Vec<TokenizedSentence>,
}

impl Rewriter for PreloadedRewrites {
    fn rewrite_all(&self, inputs: &[TokenizedSentence]) -> Result<Vec<TokenizedSentence>, PipelineError> {
        if self.lines.len() != inputs.len() {
            return Err(PipelineError::LineCountMismatch {
                expected: inputs.len(),
                actual: self.lines.len(),
                line: inputs.len().min(self.lines.len()) + 1,
            });
        }
        Ok(self.lines.clone())
    }
}

/// Where a pseudo-parallel pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SelfTrain,
    BackTranslation,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::SelfTrain => f.write_str("self_train"),
            Provenance::BackTranslation => f.write_str("back_translation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoPair {
    pub source: TokenizedSentence,
    pub target: TokenizedSentence,
    pub provenance: Provenance,
}

/// One self-training round: rewrite source-style monolingual text and keep
/// the pairs whose character edit distance is strictly over `min_edit`.
pub fn self_train_round(
    rewriter: &dyn Rewriter,
    monolingual_source: &[TokenizedSentence],
    min_edit: usize,
) -> Result<Vec<PseudoPair>, PipelineError> {
    let rewrites = rewriter.rewrite_all(monolingual_source)?;
    Ok(monolingual_source
        .iter()
        .zip(rewrites)
        .filter(|(src, rw)| char_edit_distance(src.raw(), rw.raw()) > min_edit)
        .map(|(src, rw)| PseudoPair {
            source: src.clone(),
            target: rw,
            provenance: Provenance::SelfTrain,
        })
        .collect())
}

/// Back-translation: rewrite authentic target-style sentences backwards; the
/// synthetic rewrite becomes the source side and the authentic sentence stays
/// the target. No sub-selection: output size equals input size.
pub fn back_translate(
    reverse_rewriter: &dyn Rewriter,
    target_monolingual: &[TokenizedSentence],
) -> Result<Vec<PseudoPair>, PipelineError> {
    let rewrites = reverse_rewriter.rewrite_all(target_monolingual)?;
    Ok(target_monolingual
        .iter()
        .zip(rewrites)
        .map(|(target, rw)| PseudoPair {
            source: rw,
            target: target.clone(),
            provenance: Provenance::BackTranslation,
        })
        .collect())
}

/// Scoring configuration for [`evaluate_systems`]. The formality and fluency
/// scorers are optional: their columns are omitted when absent.
pub struct ScorerConfig<'a> {
    pub max_n: usize,
    pub formality: Option<FormalityScorer<'a>>,
    pub fluency: Option<(&'a NgramLanguageModel, FluencyCalibration)>,
    pub ranges: AxisRanges,
    pub bootstrap_resamples: usize,
    pub seed: u64,
    /// System id to compare everything against with the paired bootstrap.
    pub baseline: Option<String>,
}

impl Default for ScorerConfig<'_> {
    fn default() -> Self {
        ScorerConfig {
            max_n: 4,
            formality: None,
            fluency: None,
            ranges: AxisRanges::proxy(),
            bootstrap_resamples: 1000,
            seed: 0,
            baseline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScores {
    pub sentence_id: String,
    pub formality: Option<f64>,
    pub fluency: Option<f64>,
    pub meaning: Option<f64>,
    pub combined: Option<f64>,
    pub bleu: f64,
    pub ter: f64,
    pub pinc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub system_id: String,
    pub formality: Option<f64>,
    pub fluency: Option<f64>,
    pub meaning: Option<f64>,
    pub combined: Option<f64>,
    pub bleu: f64,
    /// Mean of per-sentence TER ratios.
    pub ter: f64,
    pub pinc: f64,
    pub overall_rank: Option<f64>,
    /// (axis, p-value) pairs from the paired bootstrap against the configured
    /// baseline system.
    pub p_vs_baseline: Vec<(String, f64)>,
    pub per_sentence: Vec<SentenceScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// The source scored against the references ("Original" row): meaning and
    /// combined are omitted by construction.
    pub source_row: SystemReport,
    pub systems: Vec<SystemReport>,
    pub max_n: usize,
    pub ranges: AxisRanges,
    pub seed: u64,
}

impl EvaluationReport {
    /// Flatten per-sentence scores for correlation against judgments.
    pub fn auto_sentence_scores(&self) -> Vec<AutoSentenceScores> {
        let mut out = Vec::new();
        for system in &self.systems {
            for s in &system.per_sentence {
                out.push(AutoSentenceScores {
                    sentence_id: s.sentence_id.clone(),
                    system_id: system.system_id.clone(),
                    formality: s.formality,
                    fluency: s.fluency,
                    meaning: s.meaning,
                    bleu: Some(s.bleu),
                    ter: Some(s.ter),
                    pinc: Some(s.pinc),
                });
            }
        }
        out
    }
}

/// Reserved id for the source row of the report.
pub const SOURCE_ROW_ID: &str = "original_source";

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_opt(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        None
    } else {
        Some(mean(&present))
    }
}

struct ScoredSystem {
    report: SystemReport,
    // per-sentence series used for significance testing, keyed by axis name
    series: Vec<(String, Vec<f64>)>,
}

fn score_system(
    system_id: &str,
    outputs: &[TokenizedSentence],
    test: &CorpusSplit,
    refs: &[Vec<Vec<String>>],
    cfg: &ScorerConfig<'_>,
    is_source_row: bool,
) -> Result<ScoredSystem, PipelineError> {
    let mut per_sentence = Vec::with_capacity(outputs.len());
    for (ex, output) in test.examples.iter().zip(outputs.iter()) {
        let idx = per_sentence.len();
        let formality = cfg.formality.as_ref().map(|s| s.score(output));
        let fluency = match &cfg.fluency {
            Some((lm, cal)) if !output.is_empty() => Some(fluency_proxy(lm, cal, output)?),
            _ => None,
        };
        let meaning = if is_source_row {
            None
        } else {
            Some(meaning_proxy(ex.source.tokens(), output.tokens()))
        };
        let combined = match (formality, fluency, meaning) {
            (Some(f), Some(fl), Some(m)) if !is_source_row => {
                Some(combined_score(f, fl, m, &cfg.ranges)?)
            }
            _ => None,
        };
        // an empty rewrite is a valid degenerate output: nothing novel in it,
        // so PINC is 0 (the strict metric itself rejects empty candidates)
        let pinc_score = if output.is_empty() {
            0.0
        } else {
            pinc(ex.source.tokens(), output.tokens(), cfg.max_n).map_err(PipelineError::from)?
        };
        per_sentence.push(SentenceScores {
            sentence_id: ex.id.clone(),
            formality,
            fluency,
            meaning,
            combined,
            bleu: sentence_bleu(output.tokens(), &refs[idx], cfg.max_n),
            ter: ter(output.tokens(), &refs[idx])?,
            pinc: pinc_score,
        });
    }

    let candidate_tokens: Vec<Vec<String>> =
        outputs.iter().map(|s| s.tokens().to_vec()).collect();
    let bleu = corpus_bleu(&candidate_tokens, refs, cfg.max_n)?;

    let collect = |f: fn(&SentenceScores) -> Option<f64>| -> Vec<Option<f64>> {
        per_sentence.iter().map(f).collect()
    };
    let series: Vec<(String, Vec<f64>)> = [
        ("formality", collect(|s| s.formality)),
        ("fluency", collect(|s| s.fluency)),
        ("meaning", collect(|s| s.meaning)),
        ("combined", collect(|s| s.combined)),
        ("bleu", collect(|s| Some(s.bleu))),
        ("ter", collect(|s| Some(s.ter))),
        ("pinc", collect(|s| Some(s.pinc))),
    ]
    .into_iter()
    .filter(|(_, vals)| vals.iter().all(|v| v.is_some()))
    .map(|(name, vals)| (name.to_string(), vals.into_iter().flatten().collect()))
    .collect();

    let report = SystemReport {
        system_id: system_id.to_string(),
        formality: mean_opt(&collect(|s| s.formality)),
        fluency: mean_opt(&collect(|s| s.fluency)),
        meaning: mean_opt(&collect(|s| s.meaning)),
        combined: mean_opt(&collect(|s| s.combined)),
        bleu,
        ter: mean(&per_sentence.iter().map(|s| s.ter).collect::<Vec<f64>>()),
        pinc: mean(&per_sentence.iter().map(|s| s.pinc).collect::<Vec<f64>>()),
        overall_rank: None,
        p_vs_baseline: Vec::new(),
        per_sentence,
    };
    Ok(ScoredSystem { report, series })
}

/// Score every system against the multi-reference test set and assemble the
/// report. Outputs must be line-aligned with the test set; the first
/// offending line is reported otherwise. Deterministic given the config.
pub fn evaluate_systems(
    test: &CorpusSplit,
    systems: &[(String, Vec<TokenizedSentence>)],
    cfg: &ScorerConfig<'_>,
) -> Result<EvaluationReport, PipelineError> {
    if test.examples.is_empty() {
        return Err(PipelineError::EmptyTestSet);
    }
    let mut refs: Vec<Vec<Vec<String>>> = Vec::with_capacity(test.examples.len());
    for ex in &test.examples {
        if ex.references.is_empty() {
            return Err(PipelineError::MissingReference { example_id: ex.id.clone() });
        }
        refs.push(ex.references.iter().map(|r| r.tokens().to_vec()).collect());
    }
    for (system_id, outputs) in systems {
        if outputs.len() != test.examples.len() {
            return Err(PipelineError::Misaligned {
                system_id: system_id.clone(),
                expected: test.examples.len(),
                actual: outputs.len(),
                line: test.examples.len().min(outputs.len()) + 1,
            });
        }
    }

    let sources: Vec<TokenizedSentence> =
        test.examples.iter().map(|ex| ex.source.clone()).collect();
    let source_row = score_system(SOURCE_ROW_ID, &sources, test, &refs, cfg, true)?.report;

    let mut scored: Vec<ScoredSystem> = Vec::with_capacity(systems.len());
    for (system_id, outputs) in systems {
        scored.push(score_system(system_id, outputs, test, &refs, cfg, false)?);
    }

    if let Some(baseline_id) = &cfg.baseline {
        if let Some(base_idx) = scored.iter().position(|s| &s.report.system_id == baseline_id) {
            let baseline_series = scored[base_idx].series.clone();
            for (i, sys) in scored.iter_mut().enumerate() {
                if i == base_idx {
                    continue;
                }
                let mut ps = Vec::new();
                for (axis, values) in &sys.series {
                    let Some((_, base_values)) =
                        baseline_series.iter().find(|(name, _)| name == axis)
                    else {
                        continue;
                    };
                    if values.len() == base_values.len() && values.len() >= 2 {
                        let p = paired_bootstrap(values, base_values, cfg.bootstrap_resamples, cfg.seed)?;
                        ps.push((axis.clone(), p));
                    }
                }
                sys.report.p_vs_baseline = ps;
            }
        }
    }

    Ok(EvaluationReport {
        source_row,
        systems: scored.into_iter().map(|s| s.report).collect(),
        max_n: cfg.max_n,
        ranges: cfg.ranges,
        seed: cfg.seed,
    })
}
