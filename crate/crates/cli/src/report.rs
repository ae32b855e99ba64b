//! Fixed-width text renderings of the evaluation and correlation reports,
//! plus the corpus stats card.

use restyle_core::corpus::CorpusStats;
use restyle_core::metrics::CorrelationReport;
use restyle_core::pipeline::{EvaluationReport, SystemReport};

const STAR_THRESHOLD: f64 = 0.001;

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.2}"),
        None => "--".to_string(),
    }
}

fn star(report: &SystemReport, axis: &str) -> &'static str {
    report
        .p_vs_baseline
        .iter()
        .find(|(name, _)| name == axis)
        .map(|(_, p)| if *p < STAR_THRESHOLD { "*" } else { "" })
        .unwrap_or("")
}

fn render_row(r: &SystemReport) -> String {
    format!(
        "{:<18} {:>10} {:>18} {:>22} {:>9} {:>8} {:>6} {:>7} {:>6}",
        r.system_id,
        format!("{}{}", fmt_opt(r.formality), star(r, "formality")),
        format!("{}{}", fmt_opt(r.fluency), star(r, "fluency")),
        format!("{}{}", fmt_opt(r.meaning), star(r, "meaning")),
        format!("{}{}", fmt_opt(r.combined), star(r, "combined")),
        format!("{:.2}{}", r.bleu, star(r, "bleu")),
        format!("{:.2}{}", r.ter, star(r, "ter")),
        format!("{:.2}{}", r.pinc, star(r, "pinc")),
        fmt_opt(r.overall_rank),
    )
}

/// Per-system score table. Proxy columns are labeled as proxies; a trailing
/// `*` marks scores whose paired-bootstrap p-value against the configured
/// baseline is below 0.001.
pub fn render_evaluation(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>10} {:>18} {:>22} {:>9} {:>8} {:>6} {:>7} {:>6}\n",
        "system",
        "formality",
        "fluency (LM proxy)",
        "meaning (lexical proxy)",
        "combined",
        "BLEU",
        "TER",
        "PINC",
        "rank"
    ));
    out.push_str(&render_row(&report.source_row));
    out.push('\n');
    for system in &report.systems {
        out.push_str(&render_row(system));
        out.push('\n');
    }
    out
}

/// Correlation table: metric vs. human criterion with Spearman rho and the
/// permutation p-value.
pub fn render_correlations(report: &CorrelationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:<14} {:>7} {:>7} {:>10}\n",
        "automatic", "human", "rho", "pairs", "p"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<24} {:<14} {:>7.2} {:>7} {:>10.4}{}\n",
            row.metric,
            row.human_criterion,
            row.rho,
            row.pairs,
            row.p_value,
            if row.p_value < STAR_THRESHOLD { " *" } else { "" }
        ));
    }
    out
}

/// Key/value card for corpus statistics.
pub fn render_stats(stats: &CorpusStats, with_formality: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!("examples: {}\n", stats.examples));
    out.push_str(&format!("edit_distance_mean: {:.4}\n", stats.edit_distance_mean));
    out.push_str(&format!("edit_distance_std: {:.4}\n", stats.edit_distance_std));
    if with_formality {
        out.push_str(&format!("source_formality_mean: {:.4}\n", stats.source_formality_mean));
        out.push_str(&format!("reference_formality_mean: {:.4}\n", stats.reference_formality_mean));
    }
    out.push_str(&format!("source_length_mean: {:.4}\n", stats.source_length_mean));
    out.push_str(&format!("reference_length_mean: {:.4}\n", stats.reference_length_mean));
    out
}
