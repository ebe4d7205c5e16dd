//! Caption similarity scorers.
//!
//! All scorers work on [`TokenSequence`]s produced by [`tokenize`], are pure, and give
//! bit-identical results for identical inputs.

mod bleu;
mod cider;
mod meteor;
mod ngram;
mod rouge;
mod tokenize;

pub use bleu::{bleu4, bleu4_smoothed, corpus_bleu4, BleuStats};
pub use cider::{build_df, CiderD, CorpusDfTable};
pub use meteor::{Meteor, SynonymTable};
pub use ngram::NgramProfile;
pub use rouge::{lcs_len, rouge_l, ROUGE_BETA};
pub use tokenize::{tokenize, PunctuationRule, TokenSequence, Tokenizer};

/// Largest n-gram order used by BLEU and CIDEr.
pub const MAX_NGRAM: usize = 4;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("document-frequency table is empty")]
    EmptyDfTable,
    #[error("candidate and reference lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least one reference is required")]
    NoReferences,
    #[error("synonym table: {0}")]
    Synonyms(String),
}
