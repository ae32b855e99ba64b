//! Subcommand implementations: resolve inputs, call into `restyle-core`, and
//! write outputs atomically. Per-sentence work is parallelized with rayon;
//! every code path produces identical output regardless of thread count.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use restyle_core::corpus::{
    assemble_training_set, corpus_stats, filter_sentence, formality_side, FilterConfig,
    FilterDecision, FormalitySide, SplitName,
};
use restyle_core::formality::{
    train_formality, FeatureExtractor, FormalityScorer, TrainOptions,
};
use restyle_core::lm::{
    calibrate_fluency, moore_lewis_select, train_lm, SelectionRule, Smoothing,
};
use restyle_core::metrics::{correlate_report, overall_rank, AxisRanges, CorrelateOptions};
use restyle_core::pipeline::{
    back_translate, evaluate_systems, self_train_round, EvaluationReport, PreloadedRewrites,
    PseudoPair, Rewriter, RuleFormalizer, RuleInformalizer, ScorerConfig,
};
use restyle_core::rules::{formalize, informalize, ReverseRuleProbabilities};
use restyle_core::text::{tokenize, TokenizedSentence};

use crate::cli::{
    AssembleArgs, AugmentCommand, BackTranslateArgs, Cli, Command, CorrelateArgs, DirectionArg,
    EvaluateArgs, FilterArgs, Globals, PartitionArgs, RewriteArgs, RewriterArg,
    ScoreFormalityArgs, SelectArgs, SelfTrainArgs, SmoothingArg, StatsArgs, TrainFormalityArgs,
    TrainLmArgs,
};
use crate::formats;
use crate::report;
use crate::{CliError, Result};

pub fn run(cli: Cli) -> Result<()> {
    let globals = cli.resolve_globals()?;
    // A failed build means a pool already exists (repeated in-process runs);
    // results do not depend on the pool size.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(globals.threads)
        .build_global();
    match &cli.command {
        Command::Filter(args) => filter_op(&globals, args),
        Command::Partition(args) => partition_op(&globals, args),
        Command::Rewrite(args) => rewrite_op(&globals, args),
        Command::TrainFormality(args) => train_formality_op(&globals, args),
        Command::ScoreFormality(args) => score_formality_op(&globals, args),
        Command::TrainLm(args) => train_lm_op(&globals, args),
        Command::Select(args) => select_op(&globals, args),
        Command::Augment(AugmentCommand::SelfTrain(args)) => self_train_op(&globals, args),
        Command::Augment(AugmentCommand::BackTranslate(args)) => back_translate_op(&globals, args),
        Command::Augment(AugmentCommand::Assemble(args)) => assemble_op(&globals, args),
        Command::Evaluate(args) => evaluate_op(&globals, args),
        Command::Correlate(args) => correlate_op(&globals, args),
        Command::Stats(args) => stats_op(&globals, args),
    }
}

fn probs_from(globals: &Globals, p_uppercase: Option<f64>, p_repetition: Option<f64>) -> Result<ReverseRuleProbabilities> {
    let p_up = p_uppercase.unwrap_or(globals.p_uppercase);
    let p_rep = p_repetition.unwrap_or(globals.p_repetition);
    for (name, p) in [("p-uppercase", p_up), ("p-repetition", p_rep)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::usage(format!("--{name} must be in [0, 1], got {p}")));
        }
    }
    Ok(ReverseRuleProbabilities {
        p_uppercase_word: p_up,
        p_char_repetition: p_rep,
        seed: globals.seed,
    })
}

fn filter_op(_globals: &Globals, args: &FilterArgs) -> Result<()> {
    let cfg = FilterConfig {
        min_tokens: args.min_tokens,
        max_tokens: args.max_tokens,
        reject_questions: !args.allow_questions,
        reject_urls: !args.allow_urls,
    };
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let mut kept = formats::AtomicWriter::create(&args.output)?;
    let mut rejected = match &args.rejected {
        Some(path) => Some(formats::AtomicWriter::create(path)?),
        None => None,
    };
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    formats::for_each_line_chunk(
        &args.input,
        formats::STREAM_CHUNK_LINES,
        |lines| {
            Ok(lines
                .into_par_iter()
                .map(|raw| {
                    let decision = filter_sentence(&tokenize(&raw), &cfg);
                    (raw, decision)
                })
                .collect::<Vec<_>>())
        },
        |batch| {
            for (raw, decision) in batch {
                total += 1;
                match decision {
                    FilterDecision::Keep => {
                        kept.write_str(&raw)?;
                        kept.write_str("\n")?;
                        *counts.entry("kept".to_string()).or_insert(0) += 1;
                    }
                    FilterDecision::Reject(reason) => {
                        if let Some(w) = rejected.as_mut() {
                            w.write_str(&format!("{reason}\t{raw}\n"))?;
                        }
                        *counts.entry(format!("rejected_{reason}")).or_insert(0) += 1;
                    }
                }
            }
            Ok(())
        },
    )?;
    kept.finish()?;
    if let Some(w) = rejected {
        w.finish()?;
    }
    println!("total: {total}");
    for (key, count) in &counts {
        println!("{key}: {count}");
    }
    Ok(())
}

fn partition_op(globals: &Globals, args: &PartitionArgs) -> Result<()> {
    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let model = formats::load_formality_model(&args.model, &lexicons)?;
    let scorer = FormalityScorer::new(&lexicons, &model);
    let mut informal = formats::AtomicWriter::create(&args.informal)?;
    let mut formal = formats::AtomicWriter::create(&args.formal)?;
    let mut counts = [0usize; 3]; // informal, formal, dropped
    formats::for_each_line_chunk(
        &args.input,
        formats::STREAM_CHUNK_LINES,
        |lines| {
            Ok(lines
                .into_par_iter()
                .map(|raw| {
                    let side = formality_side(scorer.score(&tokenize(&raw)), args.threshold);
                    (raw, side)
                })
                .collect::<Vec<_>>())
        },
        |batch| {
            for (raw, side) in batch {
                match side {
                    Some(FormalitySide::Informal) => {
                        informal.write_str(&raw)?;
                        informal.write_str("\n")?;
                        counts[0] += 1;
                    }
                    Some(FormalitySide::Formal) => {
                        formal.write_str(&raw)?;
                        formal.write_str("\n")?;
                        counts[1] += 1;
                    }
                    None => counts[2] += 1,
                }
            }
            Ok(())
        },
    )?;
    informal.finish()?;
    formal.finish()?;
    println!("informal: {}", counts[0]);
    println!("formal: {}", counts[1]);
    println!("dropped_at_threshold: {}", counts[2]);
    Ok(())
}

fn rewrite_op(globals: &Globals, args: &RewriteArgs) -> Result<()> {
    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let probs = probs_from(globals, args.p_uppercase, args.p_repetition)?;
    let mut out = formats::AtomicWriter::create(&args.output)?;
    let mut count = 0usize;
    formats::for_each_line_chunk(
        &args.input,
        formats::STREAM_CHUNK_LINES,
        |lines| {
            Ok(lines
                .into_par_iter()
                .map(|raw| {
                    let s = tokenize(&raw);
                    let rewritten = match args.direction {
                        DirectionArg::Formal => formalize(&s, &lexicons),
                        DirectionArg::Informal => informalize(&s, &lexicons, &probs),
                    };
                    if args.detok {
                        restyle_core::text::detokenize(rewritten.tokens())
                    } else {
                        rewritten.tokens().join(" ")
                    }
                })
                .collect::<Vec<_>>())
        },
        |batch| {
            for line in batch {
                out.write_str(&line)?;
                out.write_str("\n")?;
                count += 1;
            }
            Ok(())
        },
    )?;
    out.finish()?;
    println!("rewritten: {count}");
    Ok(())
}

fn train_formality_op(globals: &Globals, args: &TrainFormalityArgs) -> Result<()> {
    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let labeled = formats::read_labeled(&args.train)?;
    for (i, (_, score)) in labeled.iter().enumerate() {
        if !(-3.0..=3.0).contains(score) {
            return Err(CliError::data(format!(
                "{}: line {}: score {score} outside [-3, 3]",
                args.train.display(),
                i + 1
            )));
        }
    }
    let extractor = FeatureExtractor::new(&lexicons);
    let data: Vec<_> = labeled
        .par_iter()
        .map(|(s, y)| (extractor.extract(s), *y))
        .collect();
    let opts = TrainOptions {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        l2: args.l2,
    };
    let model = train_formality(&data, &opts).map_err(|e| CliError::data(e.to_string()))?;
    formats::save_formality_model(&args.model_out, &model, &lexicons)?;
    println!("examples: {}", model.training_meta.examples);
    println!("epochs_run: {}", model.training_meta.epochs_run);
    println!("final_loss: {:.6}", model.training_meta.final_loss);
    Ok(())
}

fn score_formality_op(globals: &Globals, args: &ScoreFormalityArgs) -> Result<()> {
    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let model = formats::load_formality_model(&args.model, &lexicons)?;
    let scorer = FormalityScorer::new(&lexicons, &model);
    let mut out = formats::AtomicWriter::create(&args.output)?;
    let mut count = 0usize;
    formats::for_each_line_chunk(
        &args.input,
        formats::STREAM_CHUNK_LINES,
        |lines| {
            Ok(lines
                .into_par_iter()
                .map(|raw| scorer.score(&tokenize(&raw)))
                .collect::<Vec<f64>>())
        },
        |batch| {
            for score in batch {
                out.write_str(&format!("{score:.6}\n"))?;
                count += 1;
            }
            Ok(())
        },
    )?;
    out.finish()?;
    println!("scored: {count}");
    Ok(())
}

fn train_lm_op(globals: &Globals, args: &TrainLmArgs) -> Result<()> {
    let mut corpus = Vec::new();
    for path in &args.input {
        corpus.extend(formats::read_sentences(path)?);
    }
    let order = args.order.unwrap_or(globals.lm_order);
    let smoothing = match args.smoothing {
        SmoothingArg::KneserNey => Smoothing::KneserNey,
        SmoothingArg::WittenBell => Smoothing::WittenBell,
    };
    let model = train_lm(&corpus, order, smoothing).map_err(|e| CliError::data(e.to_string()))?;
    formats::save_arpa(&args.arpa_out, &model)?;
    println!("order: {}", model.order());
    println!("smoothing: {}", model.smoothing());
    for (i, count) in model.ngram_counts().iter().enumerate() {
        println!("ngram_{}: {}", i + 1, count);
    }
    Ok(())
}

fn select_op(_globals: &Globals, args: &SelectArgs) -> Result<()> {
    let rule = match (args.top_k, args.max_score) {
        (Some(k), None) => SelectionRule::TopK(k),
        (None, Some(t)) => SelectionRule::MaxScore(t),
        _ => {
            return Err(CliError::usage(
                "exactly one of --top-k or --max-score is required".to_string(),
            ))
        }
    };
    let in_lm = formats::load_arpa(&args.in_domain_lm)?;
    let out_lm = formats::load_arpa(&args.out_domain_lm)?;
    let pool = formats::read_sentences(&args.pool)?;
    let picks = moore_lewis_select(&in_lm, &out_lm, &pool, rule);
    let mut selected = String::new();
    let mut scores = String::new();
    for pick in &picks {
        let raw = pool[pick.index].raw();
        selected.push_str(raw);
        selected.push('\n');
        scores.push_str(&format!("{:.6}\t{}\n", pick.score, raw));
    }
    formats::write_atomic(&args.output, &selected)?;
    if let Some(path) = &args.scores_out {
        formats::write_atomic(path, &scores)?;
    }
    println!("pool: {}", pool.len());
    println!("selected: {}", picks.len());
    Ok(())
}

fn build_rewriter<'a>(
    kind: RewriterArg,
    external: &Option<std::path::PathBuf>,
    lexicons: &'a restyle_core::rules::RuleLexicons,
    probs: ReverseRuleProbabilities,
) -> Result<Box<dyn Rewriter + 'a>> {
    match kind {
        RewriterArg::RulesFormal => Ok(Box::new(RuleFormalizer { lexicons })),
        RewriterArg::RulesInformal => Ok(Box::new(RuleInformalizer { lexicons, probs })),
        RewriterArg::External => {
            let path = external.as_ref().ok_or_else(|| {
                CliError::usage("--rewriter external requires --external <path>".to_string())
            })?;
            Ok(Box::new(PreloadedRewrites { lines: formats::read_sentences(path)? }))
        }
    }
}

fn write_pair_file(path: &Path, prefix: &str, pairs: Vec<PseudoPair>) -> Result<usize> {
    let n = pairs.len();
    let with_ids: Vec<(String, PseudoPair)> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, p)| (format!("{prefix}{i:06}"), p))
        .collect();
    formats::write_pairs(path, &with_ids)?;
    Ok(n)
}

fn self_train_op(globals: &Globals, args: &SelfTrainArgs) -> Result<()> {
    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let probs = probs_from(globals, args.p_uppercase, args.p_repetition)?;
    let rewriter = build_rewriter(args.rewriter, &args.external, &lexicons, probs)?;
    let mono = formats::read_sentences(&args.input)?;
    let pairs = self_train_round(rewriter.as_ref(), &mono, args.min_edit)
        .map_err(|e| CliError::data(e.to_string()))?;
    let kept = write_pair_file(&args.output, "st", pairs)?;
    println!("input: {}", mono.len());
    println!("kept: {kept}");
    Ok(())
}

fn back_translate_op(globals: &Globals, args: &BackTranslateArgs) -> Result<()> {
    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let probs = probs_from(globals, args.p_uppercase, args.p_repetition)?;
    let rewriter = build_rewriter(args.rewriter, &args.external, &lexicons, probs)?;
    let mono = formats::read_sentences(&args.input)?;
    let pairs = back_translate(rewriter.as_ref(), &mono)
        .map_err(|e| CliError::data(e.to_string()))?;
    let n = write_pair_file(&args.output, "bt", pairs)?;
    println!("pairs: {n}");
    Ok(())
}

fn assemble_op(_globals: &Globals, args: &AssembleArgs) -> Result<()> {
    let base: Vec<PseudoPair> =
        formats::read_pairs(&args.base)?.into_iter().map(|(_, p)| p).collect();
    let mut extras: Vec<Vec<PseudoPair>> = Vec::new();
    for path in &args.extra {
        extras.push(formats::read_pairs(path)?.into_iter().map(|(_, p)| p).collect());
    }
    let extra_refs: Vec<&[PseudoPair]> = extras.iter().map(|v| v.as_slice()).collect();
    let assembled = assemble_training_set(&base, args.dup_factor, &extra_refs)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let n = write_pair_file(&args.output, "t", assembled)?;
    println!("base: {}", base.len());
    println!("assembled: {n}");
    Ok(())
}

fn evaluate_op(globals: &Globals, args: &EvaluateArgs) -> Result<()> {
    let test = formats::read_parallel(&args.test, SplitName::Test)?;
    let mut systems: Vec<(String, Vec<TokenizedSentence>)> = Vec::new();
    for entry in &args.systems {
        let Some((id, path)) = entry.split_once('=') else {
            return Err(CliError::usage(format!(
                "--system expects `id=path`, got {entry:?}"
            )));
        };
        if systems.iter().any(|(existing, _)| existing == id) {
            return Err(CliError::usage(format!("duplicate system id {id:?}")));
        }
        systems.push((id.to_string(), formats::read_sentences(Path::new(path))?));
    }

    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let formality_model = match &args.formality_model {
        Some(path) => Some(formats::load_formality_model(path, &lexicons)?),
        None => None,
    };
    let lm = match &args.lm {
        Some(path) => Some(formats::load_arpa(path)?),
        None => None,
    };
    let fluency = match &lm {
        Some(model) => {
            let calibration_corpus: Vec<TokenizedSentence> = test
                .examples
                .iter()
                .flat_map(|ex| ex.references.iter().cloned())
                .collect();
            let calibration = calibrate_fluency(model, &calibration_corpus)
                .map_err(|e| CliError::data(format!("fluency calibration: {e}")))?;
            Some((model, calibration))
        }
        None => None,
    };

    let cfg = ScorerConfig {
        max_n: args.max_n.unwrap_or(globals.max_n),
        formality: formality_model
            .as_ref()
            .map(|m| FormalityScorer::new(&lexicons, m)),
        fluency,
        ranges: AxisRanges::proxy(),
        bootstrap_resamples: args.bootstrap,
        seed: globals.seed,
        baseline: args.baseline.clone(),
    };
    let mut evaluation =
        evaluate_systems(&test, &systems, &cfg).map_err(|e| CliError::data(e.to_string()))?;

    if let Some(path) = &args.judgments {
        let judgments = formats::read_judgments(path)?;
        let ranks = overall_rank(&judgments).map_err(|e| CliError::data(e.to_string()))?;
        for (system_id, rank) in &ranks {
            if system_id == &evaluation.source_row.system_id {
                evaluation.source_row.overall_rank = Some(*rank);
            }
            for system in evaluation.systems.iter_mut() {
                if &system.system_id == system_id {
                    system.overall_rank = Some(*rank);
                }
            }
        }
    }

    emit_report(
        &report::render_evaluation(&evaluation),
        &args.report_text,
        &args.report_json,
        &evaluation,
    )
}

fn emit_report<T: serde::Serialize>(
    text: &str,
    text_path: &Option<std::path::PathBuf>,
    json_path: &Option<std::path::PathBuf>,
    value: &T,
) -> Result<()> {
    match text_path {
        Some(path) => formats::write_atomic(path, text)?,
        None => print!("{text}"),
    }
    if let Some(path) = json_path {
        let json = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::data(format!("cannot serialize report: {e}")))?;
        formats::write_atomic(path, &json)?;
    }
    Ok(())
}

fn correlate_op(globals: &Globals, args: &CorrelateArgs) -> Result<()> {
    let evaluation: EvaluationReport =
        serde_json::from_str(&formats::read_to_string(&args.auto)?).map_err(|e| {
            CliError::data(format!("{}: bad evaluation report: {e}", args.auto.display()))
        })?;
    let judgments = formats::read_judgments(&args.judgments)?;
    let opts = CorrelateOptions {
        permutation_resamples: args.resamples,
        seed: globals.seed,
    };
    let auto = evaluation.auto_sentence_scores();
    let correlations =
        correlate_report(&auto, &judgments, &opts).map_err(|e| CliError::data(e.to_string()))?;
    emit_report(
        &report::render_correlations(&correlations),
        &args.report_text,
        &args.report_json,
        &correlations,
    )
}

fn stats_op(globals: &Globals, args: &StatsArgs) -> Result<()> {
    let split = formats::read_parallel(&args.input, SplitName::Train)?;
    let lexicons = formats::load_lexicons(&globals.lexicons)?;
    let model = match &args.model {
        Some(path) => Some(formats::load_formality_model(path, &lexicons)?),
        None => None,
    };
    let stats = match &model {
        Some(m) => {
            let scorer = FormalityScorer::new(&lexicons, m);
            corpus_stats(&split, |s| scorer.score(s))
        }
        None => corpus_stats(&split, |_| 0.0),
    }
    .map_err(|e| CliError::data(e.to_string()))?;
    print!("{}", report::render_stats(&stats, model.is_some()));
    if let Some(path) = &args.json {
        let json = serde_json::to_string_pretty(&stats)
            .map_err(|e| CliError::data(format!("cannot serialize stats: {e}")))?;
        formats::write_atomic(path, &json)?;
    }
    Ok(())
}
