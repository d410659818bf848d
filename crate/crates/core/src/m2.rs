//! MaxMatch (M2) annotation files in character mode.
//!
//! ```text
//! S 我 喜 欢 苹 果
//! A 2 3|||R|||吃|||REQUIRED|||-NONE-|||0
//! A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1
//! ```
//!
//! The `S` line holds one unit per space-separated token. Corrections are
//! written as the replacement units without separators; `-NONE-` marks a
//! deletion. A noop line maps its annotator to an empty edit set.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::text::{Edit, EditSet, Sentence, TextError};

pub const DEFAULT_KIND: &str = "R";
const NONE: &str = "-NONE-";
const SEP: &str = "|||";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum M2Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: edit [{start}, {end}) out of bounds for source of length {len}")]
    Bounds {
        line: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: annotator {annotator}: {source}")]
    InvalidEditSet {
        line: usize,
        annotator: u32,
        source: TextError,
    },
    #[error("unit {0:?} cannot be represented in an M2 file")]
    Unrepresentable(String),
}

/// Edits of one annotator plus the opaque error-type field of each edit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    edits: EditSet,
    kinds: Vec<String>,
}

impl Annotation {
    /// Every edit gets the default type `R`.
    pub fn new(edits: EditSet) -> Self {
        let kinds = vec![DEFAULT_KIND.to_string(); edits.len()];
        Self { edits, kinds }
    }

    /// Builds from `(edit, kind)` pairs in any order.
    pub fn with_kinds(mut pairs: Vec<(Edit, String)>, source_len: usize) -> Result<Self, TextError> {
        pairs.sort_by_key(|(e, _)| (e.start, e.end));
        let (edits, kinds): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Ok(Self {
            edits: EditSet::new(edits, source_len)?,
            kinds,
        })
    }

    pub fn edits(&self) -> &EditSet {
        &self.edits
    }

    pub fn kinds(&self) -> &[String] {
        &self.kinds
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Entry {
    source: Sentence,
    annotations: BTreeMap<u32, Annotation>,
}

impl M2Entry {
    pub fn new(source: Sentence) -> Result<Self, M2Error> {
        for c in source.units() {
            if c.is_whitespace() {
                return Err(M2Error::Unrepresentable(c.to_string()));
            }
        }
        Ok(Self {
            source,
            annotations: BTreeMap::new(),
        })
    }

    /// Adds or replaces the annotation for `annotator`.
    pub fn annotate(&mut self, annotator: u32, annotation: Annotation) -> Result<(), M2Error> {
        let len = self.source.len();
        if annotation.edits.source_len() != len {
            return Err(M2Error::InvalidEditSet {
                line: 0,
                annotator,
                source: TextError::LengthMismatch {
                    expected: annotation.edits.source_len(),
                    actual: len,
                },
            });
        }
        for (e, kind) in annotation.edits.iter().zip(&annotation.kinds) {
            check_replacement(&e.replacement)?;
            if kind.is_empty() || kind.contains(SEP) || kind.contains('\n') {
                return Err(M2Error::Unrepresentable(kind.clone()));
            }
        }
        self.annotations.insert(annotator, annotation);
        Ok(())
    }

    pub fn with_edits(source: Sentence, annotator: u32, edits: EditSet) -> Result<Self, M2Error> {
        let mut entry = Self::new(source)?;
        entry.annotate(annotator, Annotation::new(edits))?;
        Ok(entry)
    }

    pub fn source(&self) -> &Sentence {
        &self.source
    }

    pub fn annotations(&self) -> &BTreeMap<u32, Annotation> {
        &self.annotations
    }

    pub fn edits(&self, annotator: u32) -> Option<&EditSet> {
        self.annotations.get(&annotator).map(Annotation::edits)
    }

    /// Edit sets of all annotators in ascending id order.
    pub fn references(&self) -> Vec<&EditSet> {
        self.annotations.values().map(Annotation::edits).collect()
    }
}

fn check_replacement(units: &[char]) -> Result<(), M2Error> {
    let text: String = units.iter().collect();
    if text == NONE || units.iter().any(|c| c.is_whitespace() || *c == '|') {
        return Err(M2Error::Unrepresentable(text));
    }
    Ok(())
}

/// Parses blank-line separated M2 blocks.
pub fn parse_m2(text: &str) -> Result<Vec<M2Entry>, M2Error> {
    let mut entries = Vec::new();
    let mut current: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(block) = current.take() {
                entries.push(block.finish()?);
            }
            continue;
        }
        match current.as_mut() {
            None => current = Some(Block::start(line, line_no)?),
            Some(block) => block.push_edit(line, line_no)?,
        }
    }
    if let Some(block) = current {
        entries.push(block.finish()?);
    }
    Ok(entries)
}

struct Block {
    source: Sentence,
    line: usize,
    // annotator -> (edit, kind, line)
    edits: BTreeMap<u32, Vec<(Edit, String, usize)>>,
}

impl Block {
    fn start(line: &str, line_no: usize) -> Result<Self, M2Error> {
        let rest = if line == "S" {
            ""
        } else if let Some(rest) = line.strip_prefix("S ") {
            rest
        } else {
            return Err(M2Error::Parse {
                line: line_no,
                message: format!("expected source line starting with 'S', found {line:?}"),
            });
        };
        let mut units = Vec::new();
        for token in rest.split(' ').filter(|t| !t.is_empty()) {
            let mut chars = token.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => units.push(c),
                _ => {
                    return Err(M2Error::Parse {
                        line: line_no,
                        message: format!("source token {token:?} is not a single character"),
                    })
                }
            }
        }
        Ok(Self {
            source: Sentence::new(units),
            line: line_no,
            edits: BTreeMap::new(),
        })
    }

    fn push_edit(&mut self, line: &str, line_no: usize) -> Result<(), M2Error> {
        let parse_err = |message: String| M2Error::Parse { line: line_no, message };
        let body = line
            .strip_prefix("A ")
            .ok_or_else(|| parse_err(format!("expected annotation line starting with 'A', found {line:?}")))?;
        let fields: Vec<&str> = body.split(SEP).collect();
        if fields.len() != 6 {
            return Err(parse_err(format!(
                "expected 6 '|||'-separated fields, found {}",
                fields.len()
            )));
        }
        let annotator: u32 = fields[5]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad annotator id {:?}", fields[5])))?;
        let mut span = fields[0].split_whitespace();
        let (start, end) = match (span.next(), span.next(), span.next()) {
            (Some(s), Some(e), None) => (s, e),
            _ => return Err(parse_err(format!("bad span {:?}", fields[0]))),
        };
        let edits = self.edits.entry(annotator).or_default();
        if start == "-1" && end == "-1" {
            return Ok(());
        }
        let start: usize = start
            .parse()
            .map_err(|_| parse_err(format!("bad span start {start:?}")))?;
        let end: usize = end.parse().map_err(|_| parse_err(format!("bad span end {end:?}")))?;
        let len = self.source.len();
        if start > end || end > len {
            return Err(M2Error::Bounds {
                line: line_no,
                start,
                end,
                len,
            });
        }
        let correction = fields[2].trim();
        let replacement: Vec<char> = if correction == NONE {
            Vec::new()
        } else {
            correction.chars().filter(|c| *c != ' ').collect()
        };
        edits.push((
            Edit {
                start,
                end,
                replacement,
            },
            fields[1].to_string(),
            line_no,
        ));
        Ok(())
    }

    fn finish(self) -> Result<M2Entry, M2Error> {
        let mut entry = M2Entry {
            source: self.source,
            annotations: BTreeMap::new(),
        };
        let len = entry.source.len();
        for (annotator, items) in self.edits {
            let first_line = items.first().map_or(self.line, |(_, _, l)| *l);
            let pairs = items.into_iter().map(|(e, k, _)| (e, k)).collect();
            let annotation = Annotation::with_kinds(pairs, len).map_err(|source| M2Error::InvalidEditSet {
                line: first_line,
                annotator,
                source,
            })?;
            entry.annotations.insert(annotator, annotation);
        }
        Ok(entry)
    }
}

/// Serializes entries; every block ends with a blank line.
pub fn write_m2(entries: &[M2Entry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push('S');
        for c in entry.source.units() {
            out.push(' ');
            out.push(*c);
        }
        out.push('\n');
        for (annotator, annotation) in &entry.annotations {
            if annotation.edits.is_empty() {
                out.push_str(&format!("A -1 -1|||noop|||{NONE}|||REQUIRED|||{NONE}|||{annotator}\n"));
                continue;
            }
            for (e, kind) in annotation.edits.iter().zip(&annotation.kinds) {
                let correction = if e.replacement.is_empty() {
                    NONE.to_string()
                } else {
                    e.replacement_str()
                };
                out.push_str(&format!(
                    "A {} {}|||{kind}|||{correction}|||REQUIRED|||{NONE}|||{annotator}\n",
                    e.start, e.end
                ));
            }
        }
        out.push('\n');
    }
    out
}
