use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lmcomb_core::kfold::{read_triples, CandidateTriple, ParallelExample};
use lmcomb_core::m2::{parse_m2, M2Entry};
use lmcomb_core::Sentence;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// One sentence per line; a trailing newline does not add an empty sentence.
pub fn read_sentences(path: &Path) -> Result<Vec<Sentence>> {
    Ok(read_text(path)?
        .lines()
        .map(|l| Sentence::from(l.trim_end_matches('\r')))
        .collect())
}

/// Rows of a TSV file with at least `min_cols` columns.
pub fn read_tsv(path: &Path, min_cols: usize) -> Result<Vec<Vec<Sentence>>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<Sentence> = line.split('\t').map(Sentence::from).collect();
        if cols.len() < min_cols {
            bail!(
                "{}:{}: expected at least {} tab-separated columns, found {}",
                path.display(),
                i + 1,
                min_cols,
                cols.len()
            );
        }
        rows.push(cols);
    }
    Ok(rows)
}

/// Parallel corpus: `source<TAB>ref1[<TAB>ref2 ...]`.
pub fn read_corpus(path: &Path) -> Result<Vec<ParallelExample>> {
    read_tsv(path, 2)?
        .into_iter()
        .map(|mut row| {
            let refs = row.split_off(1);
            let src = row.pop().expect("source column");
            Ok(ParallelExample::new(src, refs)?)
        })
        .collect()
}

pub fn read_m2(path: &Path) -> Result<Vec<M2Entry>> {
    let text = read_text(path)?;
    parse_m2(&text).with_context(|| format!("parsing M2 file {}", path.display()))
}

pub fn load_triples(path: &Path) -> Result<Vec<CandidateTriple>> {
    let text = read_text(path)?;
    read_triples(&text).map_err(|(line, e)| anyhow::anyhow!("{}:{}: {}", path.display(), line, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn join_lines<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}
