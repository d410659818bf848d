//! Character-level sentences, span edits and Levenshtein alignment.
//!
//! A [`Sentence`] is a sequence of Unicode scalar values. Edits are anchored
//! to indices of the original source, so an [`EditSet`] can be applied in a
//! single left-to-right pass regardless of how many edits it holds.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("invalid edit [{start}, {end}) against source of length {len}")]
    InvalidEdit { start: usize, end: usize, len: usize },
    #[error("null edit at {0}: empty span with empty replacement")]
    NullEdit(usize),
    #[error("invalid edit set: [{prev_start}, {prev_end}) conflicts with [{next_start}, {next_end})")]
    Overlap {
        prev_start: usize,
        prev_end: usize,
        next_start: usize,
        next_end: usize,
    },
    #[error("edit set built for source length {expected}, applied to length {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Text as a sequence of Unicode scalar values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence {
    units: Vec<char>,
}

impl Sentence {
    pub fn new(units: Vec<char>) -> Self {
        Self { units }
    }

    pub fn units(&self) -> &[char] {
        &self.units
    }

    pub fn into_units(self) -> Vec<char> {
        self.units
    }

    /// Unit count (not bytes).
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn contains_str(&self, needle: &str) -> bool {
        self.to_string().contains(needle)
    }
}

impl From<&str> for Sentence {
    fn from(s: &str) -> Self {
        Self {
            units: s.chars().collect(),
        }
    }
}

impl From<String> for Sentence {
    fn from(s: String) -> Self {
        Sentence::from(s.as_str())
    }
}

impl From<&[char]> for Sentence {
    fn from(units: &[char]) -> Self {
        Self { units: units.to_vec() }
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.units {
            fmt::Write::write_char(f, *c)?;
        }
        Ok(())
    }
}

impl Serialize for Sentence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer).map(Sentence::from)
    }
}

/// Replace source units `[start, end)` with `replacement`.
///
/// `start == end` is an insertion, an empty replacement is a deletion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<char>,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: impl Into<Sentence>) -> Self {
        Self {
            start,
            end,
            replacement: replacement.into().into_units(),
        }
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn span_len(&self) -> usize {
        self.end - self.start
    }

    /// Unit cost of the cheapest operation run realizing this edit:
    /// `min(span, repl)` substitutions plus the length difference in indels.
    pub fn cost(&self) -> usize {
        self.span_len().max(self.replacement.len())
    }

    pub fn replacement_str(&self) -> String {
        self.replacement.iter().collect()
    }

    /// Two edits conflict when they cannot both be applied unambiguously:
    /// overlapping spans, two insertions at one position, or an insertion
    /// strictly inside the other edit's span. Touching spans compose.
    pub fn conflicts_with(&self, other: &Edit) -> bool {
        match (self.is_insertion(), other.is_insertion()) {
            (true, true) => self.start == other.start,
            (true, false) => other.start < self.start && self.start < other.end,
            (false, true) => self.start < other.start && other.start < self.end,
            (false, false) => self.start < other.end && other.start < self.end,
        }
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})->{:?}", self.start, self.end, self.replacement_str())
    }
}

/// Sorted, pairwise non-conflicting edits valid against one source length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EditSet {
    source_len: usize,
    edits: Vec<Edit>,
}

impl EditSet {
    pub fn empty(source_len: usize) -> Self {
        Self {
            source_len,
            edits: Vec::new(),
        }
    }

    /// Sorts `edits` by `(start, end)` and validates them against `source_len`.
    pub fn new(mut edits: Vec<Edit>, source_len: usize) -> Result<Self, TextError> {
        for e in &edits {
            if e.start > e.end || e.end > source_len {
                return Err(TextError::InvalidEdit {
                    start: e.start,
                    end: e.end,
                    len: source_len,
                });
            }
            if e.is_insertion() && e.replacement.is_empty() {
                return Err(TextError::NullEdit(e.start));
            }
        }
        edits.sort_by_key(|e| (e.start, e.end));
        for pair in edits.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            if prev.end > next.start || (prev.is_insertion() && next.is_insertion() && prev.start == next.start) {
                return Err(TextError::Overlap {
                    prev_start: prev.start,
                    prev_end: prev.end,
                    next_start: next.start,
                    next_end: next.end,
                });
            }
        }
        Ok(Self { source_len, edits })
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn edits(&self) -> &[Edit] {
        &self.edits
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edit> {
        self.edits.iter()
    }

    pub fn contains(&self, edit: &Edit) -> bool {
        self.edits.contains(edit)
    }

    /// Subset selected by indices into this set. Any subset of a valid set is valid.
    pub fn select(&self, indices: impl IntoIterator<Item = usize>) -> EditSet {
        let mut picked: Vec<usize> = indices.into_iter().collect();
        picked.sort_unstable();
        picked.dedup();
        EditSet {
            source_len: self.source_len,
            edits: picked.into_iter().map(|i| self.edits[i].clone()).collect(),
        }
    }

    /// Total unit cost of the edits.
    pub fn cost(&self) -> usize {
        self.edits.iter().map(Edit::cost).sum()
    }
}

impl<'a> IntoIterator for &'a EditSet {
    type Item = &'a Edit;
    type IntoIter = std::slice::Iter<'a, Edit>;

    fn into_iter(self) -> Self::IntoIter {
        self.edits.iter()
    }
}

/// Applies `edits` to `src`; spans refer to original source indices.
pub fn apply_edits(src: &Sentence, edits: &EditSet) -> Result<Sentence, TextError> {
    if edits.source_len != src.len() {
        return Err(TextError::LengthMismatch {
            expected: edits.source_len,
            actual: src.len(),
        });
    }
    let units = src.units();
    let mut out = Vec::with_capacity(units.len());
    let mut cursor = 0;
    for e in edits {
        out.extend_from_slice(&units[cursor..e.start]);
        out.extend_from_slice(&e.replacement);
        cursor = e.end;
    }
    out.extend_from_slice(&units[cursor..]);
    Ok(Sentence::new(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Minimum-cost alignment of `src` to `hyp` as coalesced span edits.
///
/// Unit costs (match 0, substitute/delete/insert 1). The backtrace runs from
/// the end of both strings and prefers match, then substitute, delete, insert.
pub fn extract_edits(src: &Sentence, hyp: &Sentence) -> EditSet {
    let a = src.units();
    let b = hyp.units();
    let (m, n) = (a.len(), b.len());
    let width = n + 1;
    let mut dp = vec![0u32; (m + 1) * width];
    for (j, cell) in dp[..width].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=m {
        dp[i * width] = i as u32;
        for j in 1..=n {
            let diag = dp[(i - 1) * width + j - 1] + u32::from(a[i - 1] != b[j - 1]);
            let del = dp[(i - 1) * width + j] + 1;
            let ins = dp[i * width + j - 1] + 1;
            dp[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let here = dp[i * width + j];
        if i > 0 && j > 0 && a[i - 1] == b[j - 1] && dp[(i - 1) * width + j - 1] == here {
            ops.push(Op::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dp[(i - 1) * width + j - 1] + 1 == here {
            ops.push(Op::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[(i - 1) * width + j] + 1 == here {
            ops.push(Op::Delete);
            i -= 1;
        } else {
            ops.push(Op::Insert);
            j -= 1;
        }
    }
    ops.reverse();

    let mut edits = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut run: Option<(usize, usize)> = None;
    for op in ops {
        if op == Op::Match {
            if let Some((si, sj)) = run.take() {
                edits.push(Edit {
                    start: si,
                    end: i,
                    replacement: b[sj..j].to_vec(),
                });
            }
        } else if run.is_none() {
            run = Some((i, j));
        }
        match op {
            Op::Match | Op::Substitute => {
                i += 1;
                j += 1;
            }
            Op::Delete => i += 1,
            Op::Insert => j += 1,
        }
    }
    if let Some((si, sj)) = run {
        edits.push(Edit {
            start: si,
            end: i,
            replacement: b[sj..j].to_vec(),
        });
    }
    EditSet { source_len: m, edits }
}
