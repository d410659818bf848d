//! Perplexity filters against over-correction.
//!
//! Each filter keeps a subset of the edits that align the source with the
//! system hypothesis and never introduces edits of its own. Ties always go to
//! the more conservative output.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::lm::{LmError, LmScorer};
use crate::text::{apply_edits, extract_edits, EditSet, Sentence, TextError};

pub const DEFAULT_MAX_EXHAUSTIVE: usize = 12;
pub const DEFAULT_BEAM_WIDTH: usize = 8;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("beam width must be at least 1")]
    BeamWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Sentence,
    Edit,
    Combination,
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentence" => Ok(Self::Sentence),
            "edit" => Ok(Self::Edit),
            "combination" => Ok(Self::Combination),
            other => Err(format!("unknown granularity {other:?} (sentence|edit|combination)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterConfig {
    pub granularity: Granularity,
    pub max_exhaustive: usize,
    pub beam_width: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            granularity: Granularity::Edit,
            max_exhaustive: DEFAULT_MAX_EXHAUSTIVE,
            beam_width: DEFAULT_BEAM_WIDTH,
        }
    }
}

/// Filter result: the output sentence, the edits it was built from, and
/// which of them were kept (indices into `edits`, ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub sentence: Sentence,
    pub edits: EditSet,
    pub kept: Vec<usize>,
    /// Set when the edit-combination filter fell back to beam search.
    pub used_beam: bool,
}

pub fn filter(
    src: &Sentence,
    hyp: &Sentence,
    scorer: &dyn LmScorer,
    config: &FilterConfig,
) -> Result<FilterOutcome, FilterError> {
    match config.granularity {
        Granularity::Sentence => filter_sentence_level(src, hyp, scorer),
        Granularity::Edit => filter_edit_level(src, hyp, scorer),
        Granularity::Combination => filter_edit_combination(src, hyp, scorer, config.max_exhaustive, config.beam_width),
    }
}

/// Keeps `hyp` only if its perplexity is strictly below the source's.
pub fn filter_sentence_level(
    src: &Sentence,
    hyp: &Sentence,
    scorer: &dyn LmScorer,
) -> Result<FilterOutcome, FilterError> {
    let edits = extract_edits(src, hyp);
    if edits.is_empty() || scorer.perplexity(hyp)? >= scorer.perplexity(src)? {
        return Ok(outcome(src.clone(), edits, Vec::new(), false));
    }
    let kept = (0..edits.len()).collect();
    Ok(outcome(hyp.clone(), edits, kept, false))
}

/// Keeps each edit that, applied alone, strictly lowers the source's perplexity.
pub fn filter_edit_level(src: &Sentence, hyp: &Sentence, scorer: &dyn LmScorer) -> Result<FilterOutcome, FilterError> {
    let edits = extract_edits(src, hyp);
    if edits.is_empty() {
        return Ok(outcome(src.clone(), edits, Vec::new(), false));
    }
    let base = scorer.perplexity(src)?;
    let mut kept = Vec::new();
    for i in 0..edits.len() {
        let single = apply_edits(src, &edits.select([i]))?;
        if scorer.perplexity(&single)? < base {
            kept.push(i);
        }
    }
    let sentence = apply_edits(src, &edits.select(kept.iter().copied()))?;
    Ok(outcome(sentence, edits, kept, false))
}

/// Picks the edit subset whose application has the lowest perplexity.
///
/// Up to `max_exhaustive` edits every subset is scored. Beyond that a beam
/// search adds edits in position order, and its winner competes with the
/// source and the full hypothesis. Ties go to fewer edits, then to the
/// lexicographically smaller index tuple.
pub fn filter_edit_combination(
    src: &Sentence,
    hyp: &Sentence,
    scorer: &dyn LmScorer,
    max_exhaustive: usize,
    beam_width: usize,
) -> Result<FilterOutcome, FilterError> {
    if beam_width == 0 {
        return Err(FilterError::BeamWidth);
    }
    let edits = extract_edits(src, hyp);
    let m = edits.len();
    if m == 0 {
        return Ok(outcome(src.clone(), edits, Vec::new(), false));
    }
    if m <= max_exhaustive && m < usize::BITS as usize {
        let best = (0..1usize << m)
            .into_par_iter()
            .map(|mask| {
                let subset: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
                let ppl = subset_perplexity(src, &edits, &subset, scorer)?;
                Ok::<_, FilterError>(Candidate { ppl, subset })
            })
            .try_reduce_with(|a, b| Ok(if b.better_than(&a) { b } else { a }))
            .expect("at least one subset")?;
        let sentence = apply_edits(src, &edits.select(best.subset.iter().copied()))?;
        return Ok(outcome(sentence, edits, best.subset, false));
    }

    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut eval = |subset: Vec<usize>| -> Result<Candidate, FilterError> {
        let ppl = match cache.get(&subset) {
            Some(p) => *p,
            None => {
                let p = subset_perplexity(src, &edits, &subset, scorer)?;
                cache.insert(subset.clone(), p);
                p
            }
        };
        Ok(Candidate { ppl, subset })
    };
    let mut beam = vec![eval(Vec::new())?];
    for i in 0..m {
        let mut next = Vec::with_capacity(beam.len() * 2);
        for cand in &beam {
            next.push(cand.clone());
            let mut with = cand.subset.clone();
            with.push(i);
            next.push(eval(with)?);
        }
        next.sort_by(Candidate::rank);
        next.truncate(beam_width);
        beam = next;
    }
    let mut best = beam.into_iter().next().expect("non-empty beam");
    for anchor in [eval(Vec::new())?, eval((0..m).collect())?] {
        if anchor.better_than(&best) {
            best = anchor;
        }
    }
    let sentence = apply_edits(src, &edits.select(best.subset.iter().copied()))?;
    Ok(outcome(sentence, edits, best.subset, true))
}

fn subset_perplexity(
    src: &Sentence,
    edits: &EditSet,
    subset: &[usize],
    scorer: &dyn LmScorer,
) -> Result<f64, FilterError> {
    let sentence = apply_edits(src, &edits.select(subset.iter().copied()))?;
    Ok(scorer.perplexity(&sentence)?)
}

#[derive(Debug, Clone)]
struct Candidate {
    ppl: f64,
    subset: Vec<usize>,
}

impl Candidate {
    fn rank(a: &Self, b: &Self) -> Ordering {
        a.ppl
            .total_cmp(&b.ppl)
            .then(a.subset.len().cmp(&b.subset.len()))
            .then_with(|| a.subset.cmp(&b.subset))
    }

    fn better_than(&self, other: &Self) -> bool {
        Self::rank(self, other) == Ordering::Less
    }
}

fn outcome(sentence: Sentence, edits: EditSet, kept: Vec<usize>, used_beam: bool) -> FilterOutcome {
    FilterOutcome {
        sentence,
        edits,
        kept,
        used_beam,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{CharNgramLm, NllScore};

    /// Scores a sentence by a fixed table; unlisted sentences get `default`.
    struct TableScorer {
        table: HashMap<String, f64>,
        default: f64,
    }

    impl TableScorer {
        fn new(entries: &[(&str, f64)], default: f64) -> Self {
            Self {
                table: entries.iter().map(|(s, p)| (s.to_string(), *p)).collect(),
                default,
            }
        }
    }

    impl LmScorer for TableScorer {
        fn score(&self, sentence: &Sentence) -> Result<NllScore, LmError> {
            let ppl = self.table.get(&sentence.to_string()).copied().unwrap_or(self.default);
            Ok(NllScore {
                nll: ppl.ln(),
                tokens: 1,
            })
        }
    }

    struct FailingScorer;

    impl LmScorer for FailingScorer {
        fn score(&self, _: &Sentence) -> Result<NllScore, LmError> {
            Err(LmError::Scorer("down".into()))
        }
    }

    fn s(t: &str) -> Sentence {
        Sentence::from(t)
    }

    fn pattern_lm() -> CharNgramLm {
        let text: Vec<Sentence> = (0..40).map(|_| s("我们喜欢吃苹果")).collect();
        CharNgramLm::train(&text, 3, 0.1).unwrap()
    }

    #[test]
    fn sentence_level_prefers_lower_perplexity() {
        let lm = pattern_lm();
        let src = s("我们喜欢吃苹菓");
        let hyp = s("我们喜欢吃苹果");
        assert!(lm.perplexity(&hyp).unwrap() < lm.perplexity(&src).unwrap());
        assert_eq!(filter_sentence_level(&src, &hyp, &lm).unwrap().sentence, hyp);
        // Reverse direction keeps the source.
        assert_eq!(filter_sentence_level(&hyp, &src, &lm).unwrap().sentence, hyp);
    }

    #[test]
    fn sentence_level_tie_keeps_source() {
        let scorer = TableScorer::new(&[], 5.0);
        assert_eq!(
            filter_sentence_level(&s("ab"), &s("ac"), &scorer).unwrap().sentence,
            s("ab")
        );
        assert_eq!(
            filter_sentence_level(&s("ab"), &s("ab"), &scorer).unwrap().sentence,
            s("ab")
        );
    }

    #[test]
    fn edit_level_keeps_only_lowering_edits() {
        let lm = pattern_lm();
        // Position 1 fixes an out-of-pattern unit; position 6 breaks an in-pattern one.
        let src = s("我X喜欢吃苹果");
        let hyp = s("我们喜欢吃苹Y");
        let out = filter_edit_level(&src, &hyp, &lm).unwrap();
        assert_eq!(out.edits.len(), 2);
        assert_eq!(out.kept, vec![0]);
        assert_eq!(out.sentence, s("我们喜欢吃苹果"));

        // Every edit breaks the pattern.
        let src = s("我们喜欢吃苹果");
        let hyp = s("我X喜欢吃苹Y");
        let out = filter_edit_level(&src, &hyp, &lm).unwrap();
        assert!(out.kept.is_empty());
        assert_eq!(out.sentence, src);
        assert_eq!(filter_edit_level(&src, &src, &lm).unwrap().sentence, src);
    }

    #[test]
    fn combination_empty_and_full() {
        let lm = pattern_lm();
        let src = s("我们喜欢吃苹果");
        let out = filter_edit_combination(&src, &src, &lm, 12, 8).unwrap();
        assert_eq!(out.sentence, src);
        let out = filter_edit_combination(&s("我X喜欢吃苹Y"), &src, &lm, 12, 8).unwrap();
        assert_eq!(out.sentence, src);
        assert_eq!(out.kept, vec![0, 1]);
    }

    #[test]
    fn combination_tie_prefers_fewer_edits_then_smaller_indices() {
        // src "abc" -> hyp "xbz": edits 0 ([0,1)->x) and 1 ([2,3)->z).
        let scorer = TableScorer::new(&[("abc", 9.0), ("xbc", 2.0), ("abz", 2.0), ("xbz", 2.0)], 9.0);
        let out = filter_edit_combination(&s("abc"), &s("xbz"), &scorer, 12, 8).unwrap();
        assert_eq!(out.kept, vec![0]);
        assert_eq!(out.sentence, s("xbc"));
        // Same table through the beam path.
        let out = filter_edit_combination(&s("abc"), &s("xbz"), &scorer, 0, 1).unwrap();
        assert!(out.used_beam);
        assert_eq!(out.kept, vec![0]);
    }

    #[test]
    fn beam_compares_against_source_and_hypothesis() {
        // Beam of width 1 greedily takes edit 0, missing the full hypothesis.
        let scorer = TableScorer::new(
            &[("abc", 5.0), ("xbc", 4.0), ("abz", 6.0), ("xbz", 7.0), ("ab", 1.0)],
            9.0,
        );
        let out = filter_edit_combination(&s("abc"), &s("xbz"), &scorer, 0, 1).unwrap();
        assert_eq!(out.sentence, s("xbc"));
        let scorer = TableScorer::new(&[("abc", 5.0), ("xbc", 6.0), ("abz", 6.0), ("xbz", 1.0)], 9.0);
        let out = filter_edit_combination(&s("abc"), &s("xbz"), &scorer, 0, 1).unwrap();
        assert_eq!(out.sentence, s("xbz"));
        assert_eq!(out.kept, vec![0, 1]);
    }

    #[test]
    fn scorer_errors_propagate() {
        for g in [Granularity::Sentence, Granularity::Edit, Granularity::Combination] {
            let config = FilterConfig {
                granularity: g,
                ..FilterConfig::default()
            };
            assert!(matches!(
                filter(&s("ab"), &s("ac"), &FailingScorer, &config),
                Err(FilterError::Lm(_))
            ));
        }
        assert!(matches!(
            filter_edit_combination(&s("ab"), &s("ac"), &FailingScorer, 12, 0),
            Err(FilterError::BeamWidth)
        ));
    }

    #[test]
    fn parses_granularity() {
        assert_eq!("edit".parse::<Granularity>().unwrap(), Granularity::Edit);
        assert!("word".parse::<Granularity>().is_err());
    }
}
