//! Corpus statistics for captioned datasets: per-caption counts, part-of-speech averages,
//! attribute richness, common words and a log10 length histogram, written as CSV plot data.

mod report;
mod tagger;

pub use report::{
    corpus_report, emit_plot_data, report_from_captions, CorpusReport, HistogramBin, MeanStats,
    ReportOptions, WordCount,
};
pub use tagger::{LexiconTagger, Pos, Tagger};

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("no captions to summarise")]
    Empty,
    #[error("tagger lexicon: {0}")]
    Tagger(String),
    #[error("cannot read {path}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, StatsError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionStats {
    pub characters: usize,
    pub words: usize,
    pub sentences: usize,
    pub nouns: usize,
    pub adjectives: usize,
    pub adverbs: usize,
    pub verbs: usize,
    pub attributes: usize,
}

static WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{L}\p{N}]+(?:['’\-][\p{L}\p{N}]+)*").unwrap());
static ATTRIBUTES: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| word_list(include_str!("../../data/attribute_lexicon.txt")));
static ABBREVIATIONS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| word_list(include_str!("../../data/abbreviations.txt")));

fn word_list(text: &'static str) -> HashSet<&'static str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Lowercase word tokens; hyphenated and apostrophe forms stay whole.
pub fn words(caption: &str) -> Vec<String> {
    WORD.find_iter(caption)
        .map(|m| m.as_str().replace('’', "'").to_lowercase())
        .collect()
}

/// Spans ended by `.`, `!` or `?` (or the end of text) that contain at least one word. A period
/// right after a listed abbreviation does not end a span.
pub fn count_sentences(caption: &str) -> usize {
    let chars: Vec<char> = caption.chars().collect();
    let mut count = 0;
    let mut span_has_word = false;
    let mut token = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            span_has_word = true;
            token.push(c.to_ascii_lowercase());
        } else if matches!(c, '.' | '!' | '?') {
            let next = chars.get(i + 1).copied();
            let inner_dot = c == '.' && next.is_some_and(|n| n.is_alphanumeric());
            let abbreviation = c == '.' && ABBREVIATIONS.contains(token.as_str());
            if inner_dot || abbreviation {
                token.push('.');
            } else {
                if span_has_word {
                    count += 1;
                }
                span_has_word = false;
                token.clear();
                while i + 1 < chars.len() && matches!(chars[i + 1], '.' | '!' | '?') {
                    i += 1;
                }
            }
        } else if c != '\'' && c != '-' {
            token.clear();
        }
        i += 1;
    }
    count + usize::from(span_has_word)
}

/// Counts for one caption. Attributes are tokens tagged adjective or listed in the bundled
/// attribute lexicon (each token counted once).
pub fn caption_stats(caption: &str, tagger: &dyn Tagger) -> CaptionStats {
    let text = caption.trim();
    let ws = words(text);
    let tags = tagger.tag(&ws);
    let count = |p: Pos| tags.iter().filter(|&&t| t == p).count();
    CaptionStats {
        characters: text.chars().count(),
        words: ws.len(),
        sentences: count_sentences(text),
        nouns: count(Pos::Noun),
        adjectives: count(Pos::Adjective),
        adverbs: count(Pos::Adverb),
        verbs: count(Pos::Verb),
        attributes: ws
            .iter()
            .zip(&tags)
            .filter(|(w, &t)| t == Pos::Adjective || ATTRIBUTES.contains(w.as_str()))
            .count(),
    }
}

/// Whether `word` is in the bundled attribute lexicon.
pub fn is_attribute_term(word: &str) -> bool {
    ATTRIBUTES.contains(word)
}
