//! Command-line surface: one binary, one subcommand per pipeline stage. An
//! optional TOML config can supply the shared flags; explicit flags win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::formats::LexiconPaths;
use crate::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "restyle",
    version,
    about = "Formality style transfer toolkit: rule-based rewriting, corpus pipelines, and evaluation",
    propagate_version = true
)]
pub struct Cli {
    /// Seed for every randomized step (reverse rules, bootstrap, selection)
    /// [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; 0 means all available cores [default: 0]. Output does
    /// not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML config file supplying defaults for the global flags (flags win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Contraction lexicon (`key<TAB>expansion` per line); embedded seed list
    /// by default.
    #[arg(long, global = true)]
    pub contractions: Option<PathBuf>,

    /// Slang lexicon (`key<TAB>standard` per line).
    #[arg(long, global = true)]
    pub slang: Option<PathBuf>,

    /// Swear list (one word per line).
    #[arg(long, global = true)]
    pub swear: Option<PathBuf>,

    /// Proper-noun gazetteer (one canonically-cased name per line).
    #[arg(long = "proper-nouns", global = true)]
    pub proper_nouns: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Apply the corpus creation filters to a one-sentence-per-line file.
    Filter(FilterArgs),
    /// Split sentences into informal/formal by model score.
    Partition(PartitionArgs),
    /// Rewrite sentences with the rule engine (either direction).
    Rewrite(RewriteArgs),
    /// Fit the linear formality scorer on labeled sentences.
    TrainFormality(TrainFormalityArgs),
    /// Score sentences with a trained formality model.
    ScoreFormality(ScoreFormalityArgs),
    /// Train a back-off n-gram language model and write it as ARPA.
    TrainLm(TrainLmArgs),
    /// Moore-Lewis cross-entropy-difference data selection.
    Select(SelectArgs),
    /// Build pseudo-parallel training data (self-training, back-translation,
    /// assembly).
    #[command(subcommand)]
    Augment(AugmentCommand),
    /// Score system outputs against a multi-reference test set.
    Evaluate(EvaluateArgs),
    /// Correlate automatic scores with human judgments.
    Correlate(CorrelateArgs),
    /// Corpus statistics over a parallel file.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Input corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Kept sentences, one per line.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional file receiving `reason<TAB>sentence` for rejects.
    #[arg(long)]
    pub rejected: Option<PathBuf>,
    /// Minimum token count (inclusive).
    #[arg(long, default_value_t = 5)]
    pub min_tokens: usize,
    /// Maximum token count (inclusive).
    #[arg(long, default_value_t = 25)]
    pub max_tokens: usize,
    /// Keep questions instead of rejecting them.
    #[arg(long)]
    pub allow_questions: bool,
    /// Keep sentences containing URLs.
    #[arg(long)]
    pub allow_urls: bool,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// Input corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Trained formality model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Output file for sentences scoring below the threshold.
    #[arg(long)]
    pub informal: PathBuf,
    /// Output file for sentences scoring above the threshold.
    #[arg(long)]
    pub formal: PathBuf,
    /// Sentences scoring exactly here are dropped.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    /// Informal -> formal.
    Formal,
    /// Formal -> informal.
    Informal,
}

#[derive(Args, Debug)]
pub struct RewriteArgs {
    /// Target style.
    #[arg(long, value_enum)]
    pub direction: DirectionArg,
    /// Input corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Rewritten sentences, one per line, aligned with the input.
    #[arg(long)]
    pub output: PathBuf,
    /// Probability of uppercasing one word per sentence (informal direction).
    #[arg(long)]
    pub p_uppercase: Option<f64>,
    /// Probability of character repetition per sentence (informal direction).
    #[arg(long)]
    pub p_repetition: Option<f64>,
    /// Render output prose-style (punctuation attached) instead of
    /// space-joined tokens.
    #[arg(long)]
    pub detok: bool,
}

#[derive(Args, Debug)]
pub struct TrainFormalityArgs {
    /// Labeled sentences: `score<TAB>sentence` per line, scores in [-3, 3].
    #[arg(long)]
    pub train: PathBuf,
    /// Where to write the trained model (JSON).
    #[arg(long)]
    pub model_out: PathBuf,
    /// Gradient-descent epochs.
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    /// Initial learning rate (halved automatically on overshoot).
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    /// Ridge regularization strength.
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
}

#[derive(Args, Debug)]
pub struct ScoreFormalityArgs {
    /// Trained formality model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Input corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// One score per input line.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    KneserNey,
    WittenBell,
}

#[derive(Args, Debug)]
pub struct TrainLmArgs {
    /// Training corpus file(s); repeat the flag to mix several sources.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Where to write the model in ARPA text format.
    #[arg(long)]
    pub arpa_out: PathBuf,
    /// Model order (default 5, or `lm_order` from the config file).
    #[arg(long)]
    pub order: Option<usize>,
    /// Smoothing method (Kneser-Ney falls back to Witten-Bell on degenerate
    /// counts).
    #[arg(long, value_enum, default_value_t = SmoothingArg::KneserNey)]
    pub smoothing: SmoothingArg,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// ARPA model of the in-domain (target style) corpus.
    #[arg(long)]
    pub in_domain_lm: PathBuf,
    /// ARPA model of the general out-of-domain corpus.
    #[arg(long)]
    pub out_domain_lm: PathBuf,
    /// Candidate pool, one sentence per line.
    #[arg(long)]
    pub pool: PathBuf,
    /// Selected sentences (pool order preserved).
    #[arg(long)]
    pub output: PathBuf,
    /// Keep the k best-scoring sentences.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Keep every sentence with score <= this threshold.
    #[arg(long)]
    pub max_score: Option<f64>,
    /// Optional `score<TAB>sentence` file for the selected lines.
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RewriterArg {
    /// Internal rule engine, formalizing direction.
    RulesFormal,
    /// Internal rule engine, informalizing direction.
    RulesInformal,
    /// Line-aligned outputs of an external system (see --external).
    External,
}

#[derive(Subcommand, Debug)]
pub enum AugmentCommand {
    /// Rewrite source-style monolingual text and keep pairs with edit
    /// distance strictly over the threshold.
    SelfTrain(SelfTrainArgs),
    /// Rewrite target-style monolingual text backwards; synthetic side
    /// becomes the source.
    BackTranslate(BackTranslateArgs),
    /// Upweight a base pair set by duplication and append extra sets.
    Assemble(AssembleArgs),
}

#[derive(Args, Debug)]
pub struct SelfTrainArgs {
    /// Source-style monolingual corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Pseudo-parallel pairs: id, source, target, provenance.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = RewriterArg::RulesFormal)]
    pub rewriter: RewriterArg,
    /// Rewrites file for --rewriter external (line-aligned with --input).
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Keep pairs with character edit distance strictly over this.
    #[arg(long, default_value_t = 10)]
    pub min_edit: usize,
    /// Per-sentence uppercasing probability (informalizing rewriter).
    #[arg(long)]
    pub p_uppercase: Option<f64>,
    /// Per-sentence character-repetition probability (informalizing
    /// rewriter).
    #[arg(long)]
    pub p_repetition: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BackTranslateArgs {
    /// Target-style monolingual corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Pseudo-parallel pairs: id, source, target, provenance.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = RewriterArg::RulesInformal)]
    pub rewriter: RewriterArg,
    /// Rewrites file for --rewriter external (line-aligned with --input).
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Per-sentence uppercasing probability (informalizing rewriter).
    #[arg(long)]
    pub p_uppercase: Option<f64>,
    /// Per-sentence character-repetition probability (informalizing
    /// rewriter).
    #[arg(long)]
    pub p_repetition: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AssembleArgs {
    /// Base pair file to upweight.
    #[arg(long)]
    pub base: PathBuf,
    /// Duplication factor for the base set (>= 1).
    #[arg(long, default_value_t = 1)]
    pub dup_factor: usize,
    /// Extra pair file(s), appended in argument order.
    #[arg(long)]
    pub extra: Vec<PathBuf>,
    /// Assembled pair file.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Test set: tab-separated id, source, ref1[..ref4].
    #[arg(long)]
    pub test: PathBuf,
    /// System outputs as `id=path`, one rewrite per line, aligned with the
    /// test set. Repeatable; report rows keep this order.
    #[arg(long = "system", required = true)]
    pub systems: Vec<String>,
    /// Formality model file; enables the formality column.
    #[arg(long)]
    pub formality_model: Option<PathBuf>,
    /// ARPA language model; enables the fluency (LM proxy) column,
    /// calibrated on the test-set references.
    #[arg(long)]
    pub lm: Option<PathBuf>,
    /// Judgments file; fills the overall-rank column (mean over sentences of
    /// per-judge ranks).
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    /// Baseline system id for paired-bootstrap significance stars.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Paired-bootstrap resamples for the baseline comparison.
    #[arg(long, default_value_t = 10_000)]
    pub bootstrap: usize,
    /// Highest n-gram order for BLEU/PINC (default 4, or `max_n` from the
    /// config file).
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Machine-readable report (JSON).
    #[arg(long)]
    pub report_json: Option<PathBuf>,
    /// Fixed-width text report; stdout when omitted.
    #[arg(long)]
    pub report_text: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    /// Evaluation report JSON produced by `evaluate --report-json`.
    #[arg(long)]
    pub auto: PathBuf,
    /// Human judgments: sentence_id, system_id, judge_id, criterion, value.
    #[arg(long)]
    pub judgments: PathBuf,
    /// Permutation resamples behind each p-value.
    #[arg(long, default_value_t = 10_000)]
    pub resamples: usize,
    #[arg(long)]
    pub report_json: Option<PathBuf>,
    /// Fixed-width text table; stdout when omitted.
    #[arg(long)]
    pub report_text: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Parallel file: id, source, ref1[..ref4].
    #[arg(long)]
    pub input: PathBuf,
    /// Optional formality model; enables the formality means.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Optional machine-readable output (JSON).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Keys a TOML config may supply; each corresponds to a flag and loses to an
/// explicit flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub contractions: Option<PathBuf>,
    pub slang: Option<PathBuf>,
    pub swear: Option<PathBuf>,
    pub proper_nouns: Option<PathBuf>,
    pub p_uppercase: Option<f64>,
    pub p_repetition: Option<f64>,
    pub lm_order: Option<usize>,
    pub max_n: Option<usize>,
}

/// Fully resolved global options: flag, else config, else default.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub threads: usize,
    pub lexicons: LexiconPaths,
    pub p_uppercase: f64,
    pub p_repetition: f64,
    pub lm_order: usize,
    pub max_n: usize,
}

pub const DEFAULT_SEED: u64 = 42;

impl Cli {
    pub fn resolve_globals(&self) -> Result<Globals> {
        let file: FileConfig = match &self.config {
            Some(path) => {
                let text = crate::formats::read_to_string(path)?;
                toml::from_str(&text)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let defaults = restyle_core::rules::ReverseRuleProbabilities::default();
        Ok(Globals {
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            threads: self.threads.or(file.threads).unwrap_or(0),
            lexicons: LexiconPaths {
                contractions: self.contractions.clone().or(file.contractions),
                slang: self.slang.clone().or(file.slang),
                swear: self.swear.clone().or(file.swear),
                proper_nouns: self.proper_nouns.clone().or(file.proper_nouns),
            },
            p_uppercase: file.p_uppercase.unwrap_or(defaults.p_uppercase_word),
            p_repetition: file.p_repetition.unwrap_or(defaults.p_char_repetition),
            lm_order: file.lm_order.unwrap_or(5),
            max_n: file.max_n.unwrap_or(4),
        })
    }
}
