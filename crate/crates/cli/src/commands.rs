//! Subcommand bodies. Each takes parsed inputs and returns file contents so
//! `pipeline` can chain them exactly as the individual subcommands would.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use lmcomb_core::filter::{filter, FilterConfig};
use lmcomb_core::kfold::{
    cross_infer, serialize_training_example, write_triples, CandidateTriple, CrossInferConfig, ExternalCorrector,
    ParallelExample,
};
use lmcomb_core::lm::{CharNgramLm, ExternalScorer, LmScorer};
use lmcomb_core::m2::{write_m2, M2Entry};
use lmcomb_core::merge::merge_edit_sets;
use lmcomb_core::score::{aggregate, score_sentence, Counts, ScoreReport};
use lmcomb_core::{apply_edits, extract_edits, EditSet, Sentence};

/// Rows of `source, target1, target2, ...` to M2, target `i` as annotator `i`.
pub fn align(rows: &[Vec<Sentence>]) -> Result<String> {
    let mut entries = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let (src, targets) = row.split_first().context("empty row")?;
        let mut entry = M2Entry::new(src.clone()).with_context(|| format!("row {}", i + 1))?;
        for (annotator, target) in targets.iter().enumerate() {
            let edits = extract_edits(src, target);
            entry
                .annotate(annotator as u32, lmcomb_core::m2::Annotation::new(edits))
                .with_context(|| format!("row {}", i + 1))?;
        }
        entries.push(entry);
    }
    Ok(write_m2(&entries))
}

fn check_sources(sources: &[Sentence], entries: &[M2Entry], what: &str) -> Result<()> {
    ensure!(
        sources.len() == entries.len(),
        "{what}: {} sentences but {} M2 entries",
        sources.len(),
        entries.len()
    );
    for (i, (s, e)) in sources.iter().zip(entries).enumerate() {
        ensure!(
            s == e.source(),
            "{what}: sentence {} differs from the M2 source line ({:?} vs {:?})",
            i + 1,
            s.to_string(),
            e.source().to_string()
        );
    }
    Ok(())
}

/// Applies one annotator's edits to each source. Entries without that
/// annotator pass through unchanged.
pub fn apply(sources: &[Sentence], entries: &[M2Entry], annotator: u32) -> Result<String> {
    check_sources(sources, entries, "apply")?;
    let mut out = Vec::with_capacity(entries.len());
    for entry in entries {
        let corrected = match entry.edits(annotator) {
            Some(edits) => apply_edits(entry.source(), edits)?,
            None => entry.source().clone(),
        };
        out.push(corrected);
    }
    Ok(crate::io::join_lines(&out))
}

fn edits_or_empty(entry: &M2Entry, annotator: u32) -> EditSet {
    entry
        .edits(annotator)
        .cloned()
        .unwrap_or_else(|| EditSet::empty(entry.source().len()))
}

/// Merged M2 (annotator 0) and the candidate sentences it produces.
pub fn merge_gold(system: &[M2Entry], gold: &[M2Entry], gold_index: u32) -> Result<(String, String)> {
    ensure!(
        system.len() == gold.len(),
        "system M2 has {} entries but gold M2 has {}",
        system.len(),
        gold.len()
    );
    let mut merged_entries = Vec::with_capacity(system.len());
    let mut candidates = Vec::with_capacity(system.len());
    for (i, (sys, g)) in system.iter().zip(gold).enumerate() {
        ensure!(
            sys.source() == g.source(),
            "entry {}: system and gold sources differ",
            i + 1
        );
        let sys_edits = edits_or_empty(sys, 0);
        let gold_edits = match g.edits(gold_index) {
            Some(e) => e.clone(),
            None => bail!("entry {}: gold M2 has no annotator {gold_index}", i + 1),
        };
        let merged = merge_edit_sets(&sys_edits, &gold_edits)?;
        candidates.push(apply_edits(sys.source(), &merged)?);
        merged_entries.push(M2Entry::with_edits(sys.source().clone(), 0, merged)?);
    }
    Ok((write_m2(&merged_entries), crate::io::join_lines(&candidates)))
}

pub fn kfold_build(
    corpus: &[ParallelExample],
    config: &CrossInferConfig,
    corrector: &ExternalCorrector,
    workdir: &Path,
) -> Result<String> {
    let triples = cross_infer(corpus, config, corrector, workdir)?;
    let mut buf = Vec::new();
    write_triples(&mut buf, &triples)?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

pub fn serialize(triples: &[CandidateTriple], with_candidate: bool) -> Result<String> {
    let mut out = String::new();
    for (i, t) in triples.iter().enumerate() {
        let candidate = with_candidate.then_some(&t.candidate);
        let line =
            serialize_training_example(&t.src, candidate, &t.gold).with_context(|| format!("triple {}", i + 1))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn train_lm(text: &[Sentence], order: usize, smooth_k: f64) -> Result<String> {
    Ok(CharNgramLm::train(text, order, smooth_k)?.to_model_string())
}

pub fn load_scorer(model: Option<&Path>, command: Option<&str>) -> Result<Box<dyn LmScorer>> {
    match (model, command) {
        (Some(path), None) => {
            let text = crate::io::read_text(path)?;
            let lm =
                CharNgramLm::from_model_string(&text).with_context(|| format!("loading model {}", path.display()))?;
            Ok(Box::new(lm))
        }
        (None, Some(cmd)) => Ok(Box::new(ExternalScorer::spawn(cmd)?)),
        _ => bail!("exactly one of --model or --scorer-cmd is required"),
    }
}

pub struct FilterRun {
    pub output: String,
    /// Sentences where the combination filter had to fall back to beam search.
    pub beam_fallbacks: usize,
}

pub fn filter_all(
    sources: &[Sentence],
    hyps: &[Sentence],
    scorer: &dyn LmScorer,
    config: &FilterConfig,
) -> Result<FilterRun> {
    ensure!(
        sources.len() == hyps.len(),
        "{} source sentences but {} hypotheses",
        sources.len(),
        hyps.len()
    );
    let mut out = Vec::with_capacity(sources.len());
    let mut beam_fallbacks = 0;
    for (i, (src, hyp)) in sources.iter().zip(hyps).enumerate() {
        let result = filter(src, hyp, scorer, config).with_context(|| format!("sentence {}", i + 1))?;
        beam_fallbacks += usize::from(result.used_beam);
        out.push(result.sentence);
    }
    Ok(FilterRun {
        output: crate::io::join_lines(&out),
        beam_fallbacks,
    })
}

/// Scores annotator 0 of each hypothesis entry against every annotator of
/// the matching reference entry.
pub fn score(hyp: &[M2Entry], reference: &[M2Entry], beta: f64) -> Result<ScoreReport> {
    ensure!(
        hyp.len() == reference.len(),
        "hypothesis M2 has {} entries but reference M2 has {}",
        hyp.len(),
        reference.len()
    );
    let mut counts: Vec<Counts> = Vec::with_capacity(hyp.len());
    for (i, (h, r)) in hyp.iter().zip(reference).enumerate() {
        ensure!(
            h.source() == r.source(),
            "entry {}: hypothesis and reference sources differ",
            i + 1
        );
        let hyp_edits = edits_or_empty(h, 0);
        let empty = EditSet::empty(r.source().len());
        let mut refs = r.references();
        if refs.is_empty() {
            refs.push(&empty);
        }
        counts.push(score_sentence(&hyp_edits, &refs, beta)?.counts);
    }
    Ok(aggregate(counts, beta)?)
}

pub fn report_text(report: &ScoreReport) -> String {
    format!("{}{}\n", report.to_table(), report.to_json())
}
