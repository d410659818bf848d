//! Span-level precision, recall and F-beta with multiple references.
//!
//! Hypothesis and reference edits match on exact `(start, end, replacement)`.
//! Counts are summed over the corpus before the ratios are taken.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::text::{Edit, EditSet};

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("value {name}={value} outside its domain")]
    Domain { name: &'static str, value: f64 },
    #[error("no reference annotations to score against")]
    NoReferences,
    #[error("hypothesis and reference edit sets cover different source lengths ({hyp} vs {reference})")]
    SourceMismatch { hyp: usize, reference: usize },
}

/// `(1 + b^2) p r / (b^2 p + r)`, or 0 when the denominator vanishes.
pub fn f_beta(p: f64, r: f64, beta: f64) -> Result<f64, ScoreError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ScoreError::Domain { name: "p", value: p });
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(ScoreError::Domain { name: "r", value: r });
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(ScoreError::Domain {
            name: "beta",
            value: beta,
        });
    }
    let b2 = beta * beta;
    let denom = b2 * p + r;
    Ok(if denom == 0.0 { 0.0 } else { (1.0 + b2) * p * r / denom })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, fp, fn_ }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f_beta(&self, beta: f64) -> Result<f64, ScoreError> {
        f_beta(self.precision(), self.recall(), beta)
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), |a, b| a + b)
    }
}

fn ratio(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceScore {
    pub counts: Counts,
    pub reference: usize,
}

/// Scores one sentence against every reference and keeps the best.
///
/// Best means highest sentence F-beta, then more true positives, then fewer
/// false negatives, then the lowest reference index.
pub fn score_sentence(hyp: &EditSet, refs: &[&EditSet], beta: f64) -> Result<SentenceScore, ScoreError> {
    if refs.is_empty() {
        return Err(ScoreError::NoReferences);
    }
    let hyp_set: HashSet<&Edit> = hyp.iter().collect();
    let mut best: Option<(f64, SentenceScore)> = None;
    for (index, reference) in refs.iter().enumerate() {
        if reference.source_len() != hyp.source_len() {
            return Err(ScoreError::SourceMismatch {
                hyp: hyp.source_len(),
                reference: reference.source_len(),
            });
        }
        let tp = reference.iter().filter(|e| hyp_set.contains(e)).count();
        let counts = Counts::new(tp, hyp.len() - tp, reference.len() - tp);
        let f = counts.f_beta(beta)?;
        let candidate = SentenceScore {
            counts,
            reference: index,
        };
        let replace = match &best {
            None => true,
            Some((best_f, b)) => {
                f > *best_f
                    || (f == *best_f
                        && (counts.tp > b.counts.tp || (counts.tp == b.counts.tp && counts.fn_ < b.counts.fn_)))
            }
        };
        if replace {
            best = Some((f, candidate));
        }
    }
    Ok(best.expect("non-empty references").1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub beta: f64,
}

/// Micro-averaged report over per-sentence counts.
pub fn aggregate<I>(per_sentence: I, beta: f64) -> Result<ScoreReport, ScoreError>
where
    I: IntoIterator<Item = Counts>,
{
    let total: Counts = per_sentence.into_iter().sum();
    Ok(ScoreReport {
        tp: total.tp,
        fp: total.fp,
        fn_: total.fn_,
        precision: total.precision(),
        recall: total.recall(),
        f_beta: total.f_beta(beta)?,
        beta,
    })
}

impl ScoreReport {
    /// JSON object with ratios rounded to six decimals.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"tp\":{},\"fp\":{},\"fn\":{},\"precision\":{:.6},\"recall\":{:.6},\"f_beta\":{:.6}}}",
            self.tp, self.fp, self.fn_, self.precision, self.recall, self.f_beta
        )
    }

    pub fn to_table(&self) -> String {
        let header = format!(
            "{:>6} {:>6} {:>6} {:>8} {:>8} {:>8}",
            "TP", "FP", "FN", "Prec", "Rec", "F"
        );
        let header = format!("{header}{}", self.beta);
        format!(
            "{header}\n{:>6} {:>6} {:>6} {:>8.4} {:>8.4} {:>8.4}\n",
            self.tp, self.fp, self.fn_, self.precision, self.recall, self.f_beta
        )
    }
}
