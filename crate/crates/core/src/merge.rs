//! Gold-label merging: system edits are kept only where they do not collide
//! with a gold edit, so the merged candidate carries every gold correction
//! alongside the system's over-corrections.

use crate::text::{apply_edits, extract_edits, EditSet, Sentence, TextError};

/// Union of `gold` and the `candidate` edits that conflict with no gold edit.
///
/// Exact duplicates of gold edits conflict with themselves and are kept once.
pub fn merge_edit_sets(candidate: &EditSet, gold: &EditSet) -> Result<EditSet, TextError> {
    if candidate.source_len() != gold.source_len() {
        return Err(TextError::LengthMismatch {
            expected: gold.source_len(),
            actual: candidate.source_len(),
        });
    }
    let mut merged = gold.edits().to_vec();
    merged.extend(
        candidate
            .iter()
            .filter(|c| !gold.iter().any(|g| g.conflicts_with(c)))
            .cloned(),
    );
    EditSet::new(merged, gold.source_len())
}

/// Applies the merged edit set of `system_hyp` and `gold` to `src`.
///
/// Re-aligning the result must reproduce every gold edit verbatim. A kept
/// system edit that touches a gold edit, or shifts the optimal alignment,
/// can break that (the aligner coalesces adjacent changes), so surviving
/// system edits are admitted one at a time in position order and any edit
/// that would hide a gold edit is dropped.
pub fn build_candidate(src: &Sentence, system_hyp: &Sentence, gold: &Sentence) -> Result<Sentence, TextError> {
    let gold_edits = extract_edits(src, gold);
    let merged = merge_edit_sets(&extract_edits(src, system_hyp), &gold_edits)?;
    let candidate = apply_edits(src, &merged)?;
    if realizes_gold(src, &candidate, &gold_edits) {
        return Ok(candidate);
    }

    let extras: Vec<_> = merged.iter().filter(|e| !gold_edits.contains(e)).cloned().collect();
    let mut accepted = gold_edits.edits().to_vec();
    let mut best = gold.clone();
    for extra in extras {
        let mut trial = accepted.clone();
        trial.push(extra);
        let set = EditSet::new(trial.clone(), src.len())?;
        let sentence = apply_edits(src, &set)?;
        if realizes_gold(src, &sentence, &gold_edits) {
            accepted = trial;
            best = sentence;
        }
    }
    Ok(best)
}

fn realizes_gold(src: &Sentence, candidate: &Sentence, gold_edits: &EditSet) -> bool {
    let found = extract_edits(src, candidate);
    gold_edits.iter().all(|g| found.contains(g))
}
