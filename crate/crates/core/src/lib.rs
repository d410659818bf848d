//! Data construction, perplexity filtering and span scoring around a
//! source-plus-candidate rewriter for grammatical error correction.
//!
//! * [`text`]: sentences, span edits, Levenshtein alignment.
//! * [`m2`]: M2 annotation files.
//! * [`merge`]: gold-label merging of system and reference edits.
//! * [`kfold`]: k-fold cross inference with an external corrector, plus
//!   training-example serialization.
//! * [`lm`]: the scorer contract, a character n-gram model, and an
//!   external-process scorer.
//! * [`filter`]: sentence-, edit- and combination-level perplexity filters.
//! * [`score`]: span-level precision/recall/F-beta.

pub mod filter;
pub mod kfold;
pub mod lm;
pub mod m2;
pub mod merge;
pub mod score;
pub mod text;

pub use text::{apply_edits, extract_edits, Edit, EditSet, Sentence, TextError};
