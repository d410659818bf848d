//! Pipeline configuration file (TOML).
//!
//! ```toml
//! seed = 13
//! output_dir = "out"
//!
//! [corpus]
//! train = "corpus.tsv"
//! lm_text = "clean.txt"
//!
//! [kfold]
//! k = 4
//! gold_index = 0
//!
//! [corrector]
//! train = "cp {train_file} {model_dir}/train.tsv"
//! infer = "cp {input_file} {output_file}"
//!
//! [scorer]
//! kind = "ngram"
//! order = 3
//! smooth_k = 0.1
//!
//! [filter]
//! granularity = "edit"
//!
//! [eval]
//! source = "test.src"
//! hypothesis = "test.hyp"
//! reference_m2 = "test.m2"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lmcomb_core::filter::{DEFAULT_BEAM_WIDTH, DEFAULT_MAX_EXHAUSTIVE};
use lmcomb_core::kfold::DEFAULT_K;
use lmcomb_core::lm::{DEFAULT_ORDER, DEFAULT_SMOOTH_K};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub kfold: KFoldSection,
    pub corrector: CorrectorSection,
    #[serde(default)]
    pub scorer: ScorerSection,
    #[serde(default)]
    pub filter: FilterSection,
    pub eval: Option<EvalSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub train: PathBuf,
    /// Clean text for the n-gram scorer; defaults to the corpus targets.
    pub lm_text: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KFoldSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub gold_index: usize,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_true() -> bool {
    true
}

impl Default for KFoldSection {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            gold_index: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorSection {
    pub train: String,
    pub infer: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Ngram,
    External,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSection {
    #[serde(default = "default_kind")]
    pub kind: ScorerKind,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_smooth_k")]
    pub smooth_k: f64,
    /// Command line for `kind = "external"`.
    pub command: Option<String>,
}

fn default_kind() -> ScorerKind {
    ScorerKind::Ngram
}

fn default_order() -> usize {
    DEFAULT_ORDER
}

fn default_smooth_k() -> f64 {
    DEFAULT_SMOOTH_K
}

impl Default for ScorerSection {
    fn default() -> Self {
        Self {
            kind: ScorerKind::Ngram,
            order: DEFAULT_ORDER,
            smooth_k: DEFAULT_SMOOTH_K,
            command: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default = "default_granularity")]
    pub granularity: String,
    #[serde(default = "default_max_exhaustive")]
    pub max_exhaustive: usize,
    #[serde(default = "default_beam_width")]
    pub beam_width: usize,
}

fn default_granularity() -> String {
    "edit".to_string()
}

fn default_max_exhaustive() -> usize {
    DEFAULT_MAX_EXHAUSTIVE
}

fn default_beam_width() -> usize {
    DEFAULT_BEAM_WIDTH
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            granularity: default_granularity(),
            max_exhaustive: DEFAULT_MAX_EXHAUSTIVE,
            beam_width: DEFAULT_BEAM_WIDTH,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub source: PathBuf,
    pub hypothesis: PathBuf,
    pub reference_m2: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Config = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve(base);
        if config.scorer.kind == ScorerKind::External && config.scorer.command.is_none() {
            bail!("{}: [scorer] kind = \"external\" requires `command`", path.display());
        }
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.corpus.train);
        if let Some(p) = self.corpus.lm_text.as_mut() {
            fix(p);
        }
        if let Some(eval) = self.eval.as_mut() {
            fix(&mut eval.source);
            fix(&mut eval.hypothesis);
            fix(&mut eval.reference_m2);
        }
    }
}
