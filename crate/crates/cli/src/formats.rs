//! File formats: line corpora, tab-separated parallel and pseudo-parallel
//! files, judgments, lexicons, formality model files, and ARPA language
//! models. All writers go through an atomic temp-file-and-rename so failed
//! runs never leave partial output.

use std::fs;
use std::io::Write;
use std::path::Path;

use restyle_core::corpus::{CorpusSplit, Direction, ParallelExample, SplitName};
use restyle_core::formality::{LinearFormalityModel, FEATURE_SPEC_VERSION};
use restyle_core::lm::NgramLanguageModel;
use restyle_core::metrics::{Criterion, JudgmentRecord};
use restyle_core::pipeline::{Provenance, PseudoPair};
use restyle_core::rules::RuleLexicons;
use restyle_core::text::{tokenize, TokenizedSentence};

use crate::{CliError, Result};

pub const DEFAULT_CONTRACTIONS: &str = include_str!("../data/contractions.tsv");
pub const DEFAULT_SLANG: &str = include_str!("../data/slang.tsv");
pub const DEFAULT_SWEAR: &str = include_str!("../data/swear.txt");
pub const DEFAULT_PROPER_NOUNS: &str = include_str!("../data/proper_nouns.txt");

/// Incremental atomic file writer: bytes go to a temp file in the
/// destination directory and only land on the target path when `finish` is
/// called, so interrupted or failed runs leave nothing behind.
pub struct AtomicWriter {
    writer: std::io::BufWriter<tempfile::NamedTempFile>,
    target: std::path::PathBuf,
}

impl AtomicWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| {
            CliError::data(format!("cannot create temp file near {}: {e}", path.display()))
        })?;
        Ok(AtomicWriter {
            writer: std::io::BufWriter::new(tmp),
            target: path.to_path_buf(),
        })
    }

    pub fn write_str(&mut self, s: &str) -> Result<()> {
        self.writer.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let tmp = self
            .writer
            .into_inner()
            .map_err(|e| CliError::data(format!("cannot flush {}: {e}", self.target.display())))?;
        tmp.persist(&self.target)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", self.target.display())))?;
        Ok(())
    }
}

/// Write a file atomically: temp file in the destination directory, then
/// rename over the target.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut w = AtomicWriter::create(path)?;
    w.write_str(contents)?;
    w.finish()
}

/// Streaming line-chunk driver for corpus-scale subcommands: reads
/// `chunk_lines` at a time, hands each chunk to `map` (which may parallelize
/// internally), and feeds results to `sink` in input order. Memory use is
/// bounded by the chunk size.
pub fn for_each_line_chunk<T, M, S>(
    input: &Path,
    chunk_lines: usize,
    map: M,
    mut sink: S,
) -> Result<()>
where
    M: Fn(Vec<String>) -> Result<T>,
    S: FnMut(T) -> Result<()>,
{
    use std::io::BufRead;
    let file = fs::File::open(input)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", input.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut chunk: Vec<String> = Vec::with_capacity(chunk_lines);
    for line in reader.lines() {
        let line = line.map_err(|e| CliError::data(format!("{}: {e}", input.display())))?;
        chunk.push(line);
        if chunk.len() == chunk_lines {
            sink(map(std::mem::take(&mut chunk))?)?;
            chunk.reserve(chunk_lines);
        }
    }
    if !chunk.is_empty() {
        sink(map(chunk)?)?;
    }
    Ok(())
}

/// Lines per streamed chunk; large enough to keep rayon busy, small enough
/// to bound memory on huge corpora.
pub const STREAM_CHUNK_LINES: usize = 16_384;

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

/// One sentence per line, tokenized. Trailing newline tolerated; interior
/// empty lines are kept as empty sentences so line alignment survives.
pub fn read_sentences(path: &Path) -> Result<Vec<TokenizedSentence>> {
    Ok(read_to_string(path)?.lines().map(tokenize).collect())
}

/// Parallel file: tab-separated `id, source, ref1[, ref2, ref3, ref4]`, no
/// header.
pub fn read_parallel(path: &Path, name: SplitName) -> Result<CorpusSplit> {
    let text = read_to_string(path)?;
    let mut examples = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(CliError::data(format!(
                "{}:{}: expected at least 3 tab-separated columns (id, source, ref1), got {}",
                path.display(),
                no + 1,
                fields.len()
            )));
        }
        if fields.len() > 6 {
            return Err(CliError::data(format!(
                "{}:{}: at most 4 references supported, got {}",
                path.display(),
                no + 1,
                fields.len() - 2
            )));
        }
        examples.push(ParallelExample {
            id: fields[0].to_string(),
            source: tokenize(fields[1]),
            references: fields[2..].iter().map(|r| tokenize(r)).collect(),
            direction: Direction::InformalToFormal,
        });
    }
    if examples.is_empty() {
        return Err(CliError::data(format!("{}: no examples", path.display())));
    }
    Ok(CorpusSplit { name, examples })
}

/// Pseudo-parallel pair file: `id, source, target, provenance`.
pub fn write_pairs(path: &Path, pairs: &[(String, PseudoPair)]) -> Result<()> {
    let mut out = String::new();
    for (id, pair) in pairs {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            id,
            pair.source.tokens().join(" "),
            pair.target.tokens().join(" "),
            pair.provenance
        ));
    }
    write_atomic(path, &out)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, PseudoPair)>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(CliError::data(format!(
                "{}:{}: expected 4 columns (id, source, target, provenance), got {}",
                path.display(),
                no + 1,
                fields.len()
            )));
        }
        let provenance = match fields[3] {
            "self_train" => Provenance::SelfTrain,
            "back_translation" => Provenance::BackTranslation,
            other => {
                return Err(CliError::data(format!(
                    "{}:{}: unknown provenance {other:?}",
                    path.display(),
                    no + 1
                )))
            }
        };
        out.push((
            fields[0].to_string(),
            PseudoPair {
                source: tokenize(fields[1]),
                target: tokenize(fields[2]),
                provenance,
            },
        ));
    }
    Ok(out)
}

/// Judgments file: `sentence_id, system_id, judge_id, criterion, value`.
pub fn read_judgments(path: &Path) -> Result<Vec<JudgmentRecord>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(CliError::data(format!(
                "{}:{}: expected 5 columns (sentence_id, system_id, judge_id, criterion, value), got {}",
                path.display(),
                no + 1,
                fields.len()
            )));
        }
        let criterion = match fields[3] {
            "formality" => Criterion::Formality,
            "fluency" => Criterion::Fluency,
            "meaning" => Criterion::Meaning,
            "overall_rank" => Criterion::OverallRank,
            other => {
                return Err(CliError::data(format!(
                    "{}:{}: unknown criterion {other:?}",
                    path.display(),
                    no + 1
                )))
            }
        };
        let value: f64 = fields[4].parse().map_err(|_| {
            CliError::data(format!("{}:{}: bad value {:?}", path.display(), no + 1, fields[4]))
        })?;
        let record = JudgmentRecord {
            sentence_id: fields[0].to_string(),
            system_id: fields[1].to_string(),
            judge_id: fields[2].to_string(),
            criterion,
            value,
        };
        record.validate().map_err(|e| {
            CliError::data(format!("{}:{}: {e}", path.display(), no + 1))
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Labeled formality training data: `score<TAB>sentence`.
pub fn read_labeled(path: &Path) -> Result<Vec<(TokenizedSentence, f64)>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((score, sentence)) = line.split_once('\t') else {
            return Err(CliError::data(format!(
                "{}:{}: expected `score<TAB>sentence`",
                path.display(),
                no + 1
            )));
        };
        let value: f64 = score.trim().parse().map_err(|_| {
            CliError::data(format!("{}:{}: bad score {score:?}", path.display(), no + 1))
        })?;
        out.push((tokenize(sentence), value));
    }
    Ok(out)
}

/// Paths overriding the embedded seed lexicons.
#[derive(Debug, Default, Clone)]
pub struct LexiconPaths {
    pub contractions: Option<std::path::PathBuf>,
    pub slang: Option<std::path::PathBuf>,
    pub swear: Option<std::path::PathBuf>,
    pub proper_nouns: Option<std::path::PathBuf>,
}

pub fn load_lexicons(paths: &LexiconPaths) -> Result<RuleLexicons> {
    let read_or = |p: &Option<std::path::PathBuf>, fallback: &str| -> Result<String> {
        match p {
            Some(path) => read_to_string(path),
            None => Ok(fallback.to_string()),
        }
    };
    let contractions = RuleLexicons::parse_kv(&read_or(&paths.contractions, DEFAULT_CONTRACTIONS)?)
        .map_err(|e| CliError::data(format!("contractions lexicon: {e}")))?;
    let slang = RuleLexicons::parse_kv(&read_or(&paths.slang, DEFAULT_SLANG)?)
        .map_err(|e| CliError::data(format!("slang lexicon: {e}")))?;
    let swear = RuleLexicons::parse_words(&read_or(&paths.swear, DEFAULT_SWEAR)?);
    let proper = RuleLexicons::parse_words(&read_or(&paths.proper_nouns, DEFAULT_PROPER_NOUNS)?);
    RuleLexicons::new(contractions, slang, swear, proper)
        .map_err(|e| CliError::data(format!("lexicon validation failed: {e}")))
}

/// On-disk formality model: the trained weights plus a digest of the
/// lexicons the features were extracted with. Feature counts (contractions,
/// slang, swears) depend on those lexicons, so scoring with a different set
/// would silently skew predictions.
#[derive(serde::Serialize, serde::Deserialize)]
pub struct ModelFile {
    pub lexicon_fingerprint: u64,
    pub model: LinearFormalityModel,
}

/// Model file: versioned JSON; loading with a mismatched feature-spec
/// version or different lexicons fails loudly.
pub fn save_formality_model(
    path: &Path,
    model: &LinearFormalityModel,
    lexicons: &RuleLexicons,
) -> Result<()> {
    let file = ModelFile { lexicon_fingerprint: lexicons.fingerprint(), model: model.clone() };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::data(format!("cannot serialize model: {e}")))?;
    write_atomic(path, &json)
}

pub fn load_formality_model(path: &Path, lexicons: &RuleLexicons) -> Result<LinearFormalityModel> {
    let file: ModelFile = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| CliError::data(format!("{}: bad model file: {e}", path.display())))?;
    if file.model.feature_spec_version != FEATURE_SPEC_VERSION {
        return Err(CliError::data(format!(
            "{}: feature spec {:?} does not match this build ({:?})",
            path.display(),
            file.model.feature_spec_version,
            FEATURE_SPEC_VERSION
        )));
    }
    if file.lexicon_fingerprint != lexicons.fingerprint() {
        return Err(CliError::data(format!(
            "{}: model was trained with different lexicons; pass the same \
             --contractions/--slang/--swear/--proper-nouns files used for training",
            path.display()
        )));
    }
    Ok(file.model)
}

pub fn save_arpa(path: &Path, model: &NgramLanguageModel) -> Result<()> {
    write_atomic(path, &model.to_arpa())
}

pub fn load_arpa(path: &Path) -> Result<NgramLanguageModel> {
    NgramLanguageModel::from_arpa(&read_to_string(path)?)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}
