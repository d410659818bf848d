use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lmcomb_core::filter::{FilterConfig, FilterError, Granularity, DEFAULT_BEAM_WIDTH, DEFAULT_MAX_EXHAUSTIVE};
use lmcomb_core::kfold::{CrossInferConfig, ExternalCorrector, KFoldError};
use lmcomb_core::lm::{CharNgramLm, LmError, DEFAULT_ORDER, DEFAULT_SMOOTH_K};
use lmcomb_core::score::DEFAULT_BETA;
use lmcomb_core::Sentence;

mod commands;
mod config;
mod io;

use config::{Config, ScorerKind};

#[derive(Parser)]
#[command(
    name = "lmcomb",
    version,
    about = "Over-correction data construction, perplexity filtering and span scoring for GEC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align parallel text into M2 (target i becomes annotator i).
    Align {
        /// TSV: source<TAB>target1[<TAB>target2 ...]
        #[arg(long, conflicts_with_all = ["source", "target"])]
        input: Option<PathBuf>,
        #[arg(long, requires = "target")]
        source: Option<PathBuf>,
        #[arg(long, requires = "source")]
        target: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply one annotator's M2 edits to the source sentences.
    Apply {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        m2: PathBuf,
        #[arg(long, default_value_t = 0)]
        annotator: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Merge system edits with gold edits (gold wins conflicts).
    MergeGold {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value_t = 0)]
        gold_index: u32,
        /// Merged M2 output.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Candidate sentences output.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// K-fold cross inference over a parallel corpus.
    KfoldBuild {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        gold_index: Option<usize>,
        /// Directory for per-fold scratch files (defaults to <output>.folds).
        #[arg(long)]
        workdir: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Serialize triples into LM training lines.
    Serialize {
        #[arg(long)]
        triples: PathBuf,
        /// Emit `<sos>src<sep>tgt` lines without the candidate.
        #[arg(long)]
        no_candidate: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train a character n-gram model on one sentence per line.
    TrainLm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_SMOOTH_K)]
        smooth_k: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Filter system outputs by perplexity.
    Filter {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long, default_value = "edit")]
        granularity: Granularity,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Long-running scorer process (`<nll> <count>` per input line).
        #[arg(long)]
        scorer_cmd: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_EXHAUSTIVE)]
        max_exhaustive: usize,
        #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
        beam_width: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Span-level P/R/F against (multi-reference) M2.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        /// JSON report file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Config-driven end-to-end run.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        gold_index: Option<usize>,
        #[arg(long)]
        granularity: Option<Granularity>,
        /// Output directory, overriding the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // Usage errors are input errors (exit 1); code 2 is reserved for
    // external-process failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 for failures of an external process, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let external_lm = |e: &LmError| matches!(e, LmError::Scorer(_) | LmError::Io(_));
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<KFoldError>() {
            if e.is_external() {
                return 2;
            }
        }
        if let Some(e) = cause.downcast_ref::<LmError>() {
            if external_lm(e) {
                return 2;
            }
        }
        if let Some(FilterError::Lm(e)) = cause.downcast_ref::<FilterError>() {
            if external_lm(e) {
                return 2;
            }
        }
    }
    1
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Align {
            input,
            source,
            target,
            output,
        } => {
            let rows = match (input, source, target) {
                (Some(input), _, _) => io::read_tsv(&input, 2)?,
                (None, Some(source), Some(target)) => zip_columns(&source, &target)?,
                _ => anyhow::bail!("align needs --input or both --source and --target"),
            };
            io::emit(output.as_deref(), &commands::align(&rows)?)
        }
        Command::Apply {
            source,
            m2,
            annotator,
            output,
        } => {
            let sources = io::read_sentences(&source)?;
            let entries = io::read_m2(&m2)?;
            io::emit(output.as_deref(), &commands::apply(&sources, &entries, annotator)?)
        }
        Command::MergeGold {
            system,
            gold,
            gold_index,
            output,
            candidates,
        } => {
            let (merged, cands) = commands::merge_gold(&io::read_m2(&system)?, &io::read_m2(&gold)?, gold_index)?;
            io::emit(output.as_deref(), &merged)?;
            if let Some(path) = candidates {
                io::write_file(&path, &cands)?;
            }
            Ok(())
        }
        Command::KfoldBuild {
            corpus,
            config,
            k,
            seed,
            gold_index,
            workdir,
            output,
        } => {
            let config = Config::load(&config)?;
            let corpus = io::read_corpus(&corpus)?;
            let infer_config = CrossInferConfig {
                k: k.unwrap_or(config.kfold.k),
                seed: seed.unwrap_or(config.seed),
                gold_index: gold_index.unwrap_or(config.kfold.gold_index),
                parallel: config.kfold.parallel,
            };
            let corrector = ExternalCorrector::new(&config.corrector.train, &config.corrector.infer)?;
            let workdir = workdir.unwrap_or_else(|| with_suffix(&output, ".folds"));
            let triples = commands::kfold_build(&corpus, &infer_config, &corrector, &workdir)?;
            io::write_file(&output, &triples)
        }
        Command::Serialize {
            triples,
            no_candidate,
            output,
        } => {
            let triples = io::load_triples(&triples)?;
            io::emit(output.as_deref(), &commands::serialize(&triples, !no_candidate)?)
        }
        Command::TrainLm {
            input,
            order,
            smooth_k,
            output,
        } => {
            let text = io::read_sentences(&input)?;
            io::write_file(&output, &commands::train_lm(&text, order, smooth_k)?)
        }
        Command::Filter {
            source,
            hyp,
            granularity,
            model,
            scorer_cmd,
            max_exhaustive,
            beam_width,
            output,
        } => {
            let scorer = commands::load_scorer(model.as_deref(), scorer_cmd.as_deref())?;
            let config = FilterConfig {
                granularity,
                max_exhaustive,
                beam_width,
            };
            let run = commands::filter_all(
                &io::read_sentences(&source)?,
                &io::read_sentences(&hyp)?,
                scorer.as_ref(),
                &config,
            )?;
            report_beam(run.beam_fallbacks, max_exhaustive);
            io::emit(output.as_deref(), &run.output)
        }
        Command::Score {
            hyp,
            reference,
            beta,
            output,
        } => {
            let report = commands::score(&io::read_m2(&hyp)?, &io::read_m2(&reference)?, beta)?;
            print!("{}", commands::report_text(&report));
            if let Some(path) = output {
                io::write_file(&path, &format!("{}\n", report.to_json()))?;
            }
            Ok(())
        }
        Command::Pipeline {
            config,
            seed,
            k,
            gold_index,
            granularity,
            output,
        } => {
            let mut config = Config::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(k) = k {
                config.kfold.k = k;
            }
            if let Some(g) = gold_index {
                config.kfold.gold_index = g;
            }
            if let Some(g) = granularity {
                config.filter.granularity = match g {
                    Granularity::Sentence => "sentence",
                    Granularity::Edit => "edit",
                    Granularity::Combination => "combination",
                }
                .to_string();
            }
            if let Some(out) = output {
                config.output_dir = out;
            }
            pipeline(&config)
        }
    }
}

fn report_beam(fallbacks: usize, max_exhaustive: usize) {
    if fallbacks > 0 {
        eprintln!("note: {fallbacks} sentence(s) had more than {max_exhaustive} edits; used beam search");
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn zip_columns(source: &Path, target: &Path) -> Result<Vec<Vec<Sentence>>> {
    let sources = io::read_sentences(source)?;
    let targets = io::read_sentences(target)?;
    anyhow::ensure!(
        sources.len() == targets.len(),
        "{} has {} lines but {} has {}",
        source.display(),
        sources.len(),
        target.display(),
        targets.len()
    );
    Ok(sources.into_iter().zip(targets).map(|(s, t)| vec![s, t]).collect())
}

/// Corpus -> k-fold triples -> training lines; LM; optional filtering and
/// scoring of a system output. Every artifact lands in `output_dir`.
fn pipeline(config: &Config) -> Result<()> {
    let out = &config.output_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let corpus = io::read_corpus(&config.corpus.train)?;
    let infer_config = CrossInferConfig {
        k: config.kfold.k,
        seed: config.seed,
        gold_index: config.kfold.gold_index,
        parallel: config.kfold.parallel,
    };
    let corrector = ExternalCorrector::new(&config.corrector.train, &config.corrector.infer)?;
    let triples_path = out.join("triples.jsonl");
    let triples = commands::kfold_build(&corpus, &infer_config, &corrector, &out.join("folds"))?;
    io::write_file(&triples_path, &triples)?;
    let triples = io::load_triples(&triples_path)?;
    io::write_file(&out.join("train.txt"), &commands::serialize(&triples, true)?)?;
    eprintln!("wrote {} triples", triples.len());

    let scorer: Box<dyn lmcomb_core::lm::LmScorer> = match config.scorer.kind {
        ScorerKind::Ngram => {
            let text = match &config.corpus.lm_text {
                Some(path) => io::read_sentences(path)?,
                None => corpus
                    .iter()
                    .map(|ex| ex.gold(config.kfold.gold_index).clone())
                    .collect(),
            };
            let model = commands::train_lm(&text, config.scorer.order, config.scorer.smooth_k)?;
            io::write_file(&out.join("lm.model"), &model)?;
            Box::new(CharNgramLm::from_model_string(&model)?)
        }
        ScorerKind::External => commands::load_scorer(None, config.scorer.command.as_deref())?,
    };

    if let Some(eval) = &config.eval {
        let sources = io::read_sentences(&eval.source)?;
        let hyps = io::read_sentences(&eval.hypothesis)?;
        let filter_config = FilterConfig {
            granularity: config.filter.granularity.parse().map_err(anyhow::Error::msg)?,
            max_exhaustive: config.filter.max_exhaustive,
            beam_width: config.filter.beam_width,
        };
        let run = commands::filter_all(&sources, &hyps, scorer.as_ref(), &filter_config)?;
        report_beam(run.beam_fallbacks, filter_config.max_exhaustive);
        let filtered_path = out.join("filtered.txt");
        io::write_file(&filtered_path, &run.output)?;
        let references = io::read_m2(&eval.reference_m2)?;
        for (name, hyp_path) in [("system", eval.hypothesis.clone()), ("filtered", filtered_path)] {
            let m2 = commands::align(&zip_columns(&eval.source, &hyp_path)?)?;
            let m2_path = out.join(format!("{name}.m2"));
            io::write_file(&m2_path, &m2)?;
            let report = commands::score(&io::read_m2(&m2_path)?, &references, DEFAULT_BETA)?;
            io::write_file(
                &out.join(format!("{name}_report.json")),
                &format!("{}\n", report.to_json()),
            )?;
            eprintln!("{name}:\n{}", commands::report_text(&report));
        }
    }
    Ok(())
}
