//! K-fold cross inference.
//!
//! The corpus is split into `k` folds; for each fold a corrector is trained on
//! the other `k - 1` folds and run on the held-out one, so no sentence is ever
//! corrected by a model that saw it. Raw outputs are merged with the gold
//! labels before being emitted as `(src, candidate, gold)` triples.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::merge::build_candidate;
use crate::text::{Sentence, TextError};

pub const DEFAULT_K: usize = 4;

pub const SOS: &str = "<sos>";
pub const CAT: &str = "<cat>";
pub const SEP: &str = "<sep>";

#[derive(Debug, Error)]
pub enum KFoldError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("fold {fold}: corrector {stage} failed ({status}): {diagnostics}")]
    FoldFailure {
        fold: usize,
        stage: &'static str,
        status: String,
        diagnostics: String,
    },
    #[error("fold {fold}: corrector protocol violation: {message}")]
    Protocol { fold: usize, message: String },
    #[error("fold {fold}: i/o error on {path}: {source}")]
    Io {
        fold: usize,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Text(#[from] TextError),
}

impl KFoldError {
    /// Failures caused by the external corrector rather than by our inputs.
    pub fn is_external(&self) -> bool {
        matches!(self, Self::FoldFailure { .. } | Self::Protocol { .. } | Self::Io { .. })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SerializeError {
    #[error("sentence {0:?} contains a reserved delimiter")]
    ReservedDelimiter(String),
    #[error("expected exactly one {SEP} marker, found {0}")]
    SeparatorCount(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelExample {
    source: Sentence,
    references: Vec<Sentence>,
}

impl ParallelExample {
    pub fn new(source: Sentence, references: Vec<Sentence>) -> Result<Self, KFoldError> {
        if references.is_empty() {
            return Err(KFoldError::Config("example has no reference".into()));
        }
        Ok(Self { source, references })
    }

    pub fn source(&self) -> &Sentence {
        &self.source
    }

    pub fn references(&self) -> &[Sentence] {
        &self.references
    }

    /// Reference `index`, falling back to the last one for shorter rows.
    pub fn gold(&self, index: usize) -> &Sentence {
        &self.references[index.min(self.references.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTriple {
    pub src: Sentence,
    pub candidate: Sentence,
    pub gold: Sentence,
}

/// Splits indices `0..n` into `k` disjoint folds whose sizes differ by at
/// most one. Each fold is sorted.
pub fn partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, KFoldError> {
    if k < 2 || k > n {
        return Err(KFoldError::Config(format!(
            "k must satisfy 2 <= k <= corpus size ({n}), got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// A trainable corrector, addressed per fold.
pub trait Corrector: Sync {
    /// Trains the fold model on `(source, target)` pairs inside `workdir`.
    fn train(&self, fold: usize, pairs: &[(&Sentence, &Sentence)], workdir: &Path) -> Result<(), KFoldError>;

    /// Corrects `sources` with the fold model; one output per input, in order.
    fn infer(&self, fold: usize, sources: &[&Sentence], workdir: &Path) -> Result<Vec<Sentence>, KFoldError>;
}

/// Corrector run as shell commands over files.
///
/// The train template receives `{train_file}` (TSV `source<TAB>target`) and
/// `{model_dir}`; the infer template receives `{model_dir}`, `{input_file}`
/// (one source per line) and `{output_file}` (one correction per line, same
/// count and order). Exit code 0 means success.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCorrector {
    train_template: String,
    infer_template: String,
}

impl ExternalCorrector {
    pub fn new(train_template: impl Into<String>, infer_template: impl Into<String>) -> Result<Self, KFoldError> {
        let train_template = train_template.into();
        let infer_template = infer_template.into();
        for (name, template, required) in [
            ("train", &train_template, &["{train_file}", "{model_dir}"][..]),
            (
                "infer",
                &infer_template,
                &["{model_dir}", "{input_file}", "{output_file}"][..],
            ),
        ] {
            for placeholder in required {
                if !template.contains(placeholder) {
                    return Err(KFoldError::Config(format!(
                        "{name} command template is missing {placeholder}"
                    )));
                }
            }
        }
        Ok(Self {
            train_template,
            infer_template,
        })
    }

    fn run(&self, fold: usize, stage: &'static str, command: &str, workdir: &Path) -> Result<(), KFoldError> {
        let output = Command::new("sh")
            .arg("-c")
            .arg(command)
            .current_dir(workdir)
            .output()
            .map_err(|source| KFoldError::Io {
                fold,
                path: workdir.to_path_buf(),
                source,
            })?;
        if output.status.success() {
            return Ok(());
        }
        let mut diagnostics = String::from_utf8_lossy(&output.stderr).into_owned();
        if diagnostics.trim().is_empty() {
            diagnostics = String::from_utf8_lossy(&output.stdout).into_owned();
        }
        Err(KFoldError::FoldFailure {
            fold,
            stage,
            status: output.status.to_string(),
            diagnostics: diagnostics.trim().to_string(),
        })
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn fill(template: &str, pairs: &[(&str, &Path)]) -> String {
    pairs.iter().fold(template.to_string(), |acc, (key, path)| {
        acc.replace(key, &shell_quote(path))
    })
}

fn check_line(fold: usize, s: &Sentence) -> Result<String, KFoldError> {
    let text = s.to_string();
    if text.contains(['\t', '\n', '\r']) {
        return Err(KFoldError::Protocol {
            fold,
            message: format!("sentence {text:?} contains a tab or line break"),
        });
    }
    Ok(text)
}

fn write_file(fold: usize, path: &Path, body: &str) -> Result<(), KFoldError> {
    fs::write(path, body).map_err(|source| KFoldError::Io {
        fold,
        path: path.to_path_buf(),
        source,
    })
}

impl Corrector for ExternalCorrector {
    fn train(&self, fold: usize, pairs: &[(&Sentence, &Sentence)], workdir: &Path) -> Result<(), KFoldError> {
        let train_file = workdir.join("train.tsv");
        let model_dir = workdir.join("model");
        let mut body = String::new();
        for (src, tgt) in pairs {
            body.push_str(&check_line(fold, src)?);
            body.push('\t');
            body.push_str(&check_line(fold, tgt)?);
            body.push('\n');
        }
        write_file(fold, &train_file, &body)?;
        fs::create_dir_all(&model_dir).map_err(|source| KFoldError::Io {
            fold,
            path: model_dir.clone(),
            source,
        })?;
        let command = fill(
            &self.train_template,
            &[("{train_file}", &train_file), ("{model_dir}", &model_dir)],
        );
        self.run(fold, "train", &command, workdir)
    }

    fn infer(&self, fold: usize, sources: &[&Sentence], workdir: &Path) -> Result<Vec<Sentence>, KFoldError> {
        let input_file = workdir.join("input.txt");
        let output_file = workdir.join("output.txt");
        let model_dir = workdir.join("model");
        let mut body = String::new();
        for src in sources {
            body.push_str(&check_line(fold, src)?);
            body.push('\n');
        }
        write_file(fold, &input_file, &body)?;
        let command = fill(
            &self.infer_template,
            &[
                ("{model_dir}", &model_dir),
                ("{input_file}", &input_file),
                ("{output_file}", &output_file),
            ],
        );
        self.run(fold, "infer", &command, workdir)?;
        let text = fs::read_to_string(&output_file).map_err(|source| KFoldError::Io {
            fold,
            path: output_file.clone(),
            source,
        })?;
        let lines: Vec<Sentence> = text.lines().map(|l| Sentence::from(l.trim_end_matches('\r'))).collect();
        if lines.len() != sources.len() {
            return Err(KFoldError::Protocol {
                fold,
                message: format!("expected {} output lines, got {}", sources.len(), lines.len()),
            });
        }
        Ok(lines)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossInferConfig {
    pub k: usize,
    pub seed: u64,
    pub gold_index: usize,
    /// Run fold jobs on separate threads.
    pub parallel: bool,
}

impl Default for CrossInferConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            seed: 0,
            gold_index: 0,
            parallel: true,
        }
    }
}

/// Runs k-fold cross inference and returns one merged triple per example,
/// in corpus order. Fold `i` works in `workdir/fold-i`.
pub fn cross_infer(
    corpus: &[ParallelExample],
    config: &CrossInferConfig,
    corrector: &dyn Corrector,
    workdir: &Path,
) -> Result<Vec<CandidateTriple>, KFoldError> {
    let folds = partition(corpus.len(), config.k, config.seed)?;
    // Commands run inside the fold directory, so the paths handed to them must not be relative.
    let workdir = &std::path::absolute(workdir).map_err(|source| KFoldError::Io {
        fold: 0,
        path: workdir.to_path_buf(),
        source,
    })?;
    let run_fold = |fold: usize| -> Result<Vec<(usize, Sentence)>, KFoldError> {
        let held_out = &folds[fold];
        let dir = workdir.join(format!("fold-{fold}"));
        fs::create_dir_all(&dir).map_err(|source| KFoldError::Io {
            fold,
            path: dir.clone(),
            source,
        })?;
        let train: Vec<(&Sentence, &Sentence)> = folds
            .iter()
            .enumerate()
            .filter(|(other, _)| *other != fold)
            .flat_map(|(_, idxs)| idxs.iter())
            .map(|&i| (corpus[i].source(), corpus[i].gold(config.gold_index)))
            .collect();
        corrector.train(fold, &train, &dir)?;
        let sources: Vec<&Sentence> = held_out.iter().map(|&i| corpus[i].source()).collect();
        let outputs = corrector.infer(fold, &sources, &dir)?;
        if outputs.len() != sources.len() {
            return Err(KFoldError::Protocol {
                fold,
                message: format!("expected {} outputs, got {}", sources.len(), outputs.len()),
            });
        }
        Ok(held_out.iter().copied().zip(outputs).collect())
    };

    let results: Vec<Result<Vec<(usize, Sentence)>, KFoldError>> = if config.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..folds.len())
                .map(|fold| scope.spawn(move || run_fold(fold)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("fold thread panicked"))
                .collect()
        })
    } else {
        (0..folds.len()).map(run_fold).collect()
    };

    let mut system: Vec<Option<Sentence>> = vec![None; corpus.len()];
    for result in results {
        for (idx, out) in result? {
            system[idx] = Some(out);
        }
    }
    corpus
        .iter()
        .zip(system)
        .map(|(ex, out)| {
            let hyp = out.expect("every example belongs to one fold");
            let gold = ex.gold(config.gold_index);
            Ok(CandidateTriple {
                src: ex.source().clone(),
                candidate: build_candidate(ex.source(), &hyp, gold)?,
                gold: gold.clone(),
            })
        })
        .collect()
}

/// `<sos>src<cat>candidate<sep>tgt`, or `<sos>src<sep>tgt` without a candidate.
pub fn serialize_training_example(
    src: &Sentence,
    candidate: Option<&Sentence>,
    tgt: &Sentence,
) -> Result<String, SerializeError> {
    let check = |s: &Sentence| {
        let text = s.to_string();
        if [SOS, CAT, SEP].iter().any(|d| text.contains(d)) || text.contains('\n') {
            return Err(SerializeError::ReservedDelimiter(text));
        }
        Ok(text)
    };
    let mut out = String::from(SOS);
    out.push_str(&check(src)?);
    if let Some(candidate) = candidate {
        out.push_str(CAT);
        out.push_str(&check(candidate)?);
    }
    out.push_str(SEP);
    out.push_str(&check(tgt)?);
    Ok(out)
}

/// Unit range `[i, j)` of the target sentence after the `<sep>` marker.
pub fn target_span(serialized: &str) -> Result<(usize, usize), SerializeError> {
    let count = serialized.matches(SEP).count();
    if count != 1 {
        return Err(SerializeError::SeparatorCount(count));
    }
    let byte = serialized.find(SEP).expect("one separator") + SEP.len();
    let i = serialized[..byte].chars().count();
    let j = i + serialized[byte..].chars().count();
    Ok((i, j))
}

/// Writes triples as JSON Lines with fields `src`, `candidate`, `gold`.
pub fn write_triples<W: Write>(mut out: W, triples: &[CandidateTriple]) -> std::io::Result<()> {
    for t in triples {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_triples(text: &str) -> Result<Vec<CandidateTriple>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e)))
        .collect()
}
