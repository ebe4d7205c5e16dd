use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Adjective,
    Adverb,
    Verb,
    Other,
}

impl Pos {
    pub const COUNTED: [Pos; 4] = [Pos::Noun, Pos::Adjective, Pos::Adverb, Pos::Verb];

    pub fn parse(s: &str) -> Option<Pos> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" | "N" | "PROPN" => Some(Pos::Noun),
            "ADJ" | "ADJECTIVE" => Some(Pos::Adjective),
            "ADV" | "ADVERB" => Some(Pos::Adverb),
            "VERB" | "V" => Some(Pos::Verb),
            "OTHER" | "X" => Some(Pos::Other),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Verb => "verb",
            Pos::Other => "other",
        }
    }
}

/// Assigns one class per word token. Tokens are lowercase.
pub trait Tagger: Send + Sync {
    fn tag(&self, words: &[String]) -> Vec<Pos>;
}

const BUNDLED_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "some", "any", "each", "every", "no", "another",
];
const VERB_CUES: &[&str] = &[
    "to", "can", "could", "will", "would", "shall", "should", "may", "might", "must", "i", "you",
    "he", "she", "it", "we", "they", "who", "which", "does", "do", "did",
];
const COPULAS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "seems", "looks", "appears",
];

static DET: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| DETERMINERS.iter().copied().collect());
static CUE: LazyLock<HashSet<&'static str>> = LazyLock::new(|| VERB_CUES.iter().copied().collect());
static COP: LazyLock<HashSet<&'static str>> = LazyLock::new(|| COPULAS.iter().copied().collect());

/// Lexicon lookup with context disambiguation, then suffix rules for unknown words.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    lexicon: HashMap<String, Vec<Pos>>,
}

fn parse_lexicon(text: &str, into: &mut HashMap<String, Vec<Pos>>) -> Result<()> {
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, tags) = line
            .split_once('\t')
            .ok_or_else(|| StatsError::Tagger(format!("line {}: expected word<TAB>tags", n + 1)))?;
        let tags = tags
            .split('|')
            .map(|t| {
                Pos::parse(t)
                    .ok_or_else(|| StatsError::Tagger(format!("line {}: unknown tag {t:?}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if tags.is_empty() {
            return Err(StatsError::Tagger(format!("line {}: no tags", n + 1)));
        }
        into.insert(word.trim().to_lowercase(), tags);
    }
    Ok(())
}

impl Default for LexiconTagger {
    fn default() -> Self {
        let mut lexicon = HashMap::new();
        parse_lexicon(BUNDLED_LEXICON, &mut lexicon).expect("bundled lexicon parses");
        LexiconTagger { lexicon }
    }
}

impl LexiconTagger {
    /// The bundled lexicon with entries from `text` (`word<TAB>TAG[|TAG]` lines) taking precedence.
    pub fn with_overrides(text: &str) -> Result<Self> {
        let mut t = Self::default();
        parse_lexicon(text, &mut t.lexicon)?;
        Ok(t)
    }

    fn lookup(&self, word: &str) -> Option<&[Pos]> {
        if let Some(t) = self.lexicon.get(word) {
            return Some(t);
        }
        let base = word.split('\'').next().unwrap_or(word);
        if base != word {
            return self.lexicon.get(base).map(Vec::as_slice);
        }
        let stems = [
            word.strip_suffix("ies").map(|s| format!("{s}y")),
            word.strip_suffix("es").map(str::to_string),
            word.strip_suffix('s').map(str::to_string),
        ];
        stems
            .into_iter()
            .flatten()
            .filter(|s| s.len() > 1)
            .find_map(|s| self.lexicon.get(&s))
            .map(|t| &t[..1])
    }

    fn by_suffix(word: &str, prev: Option<&str>) -> Pos {
        if word.chars().any(|c| c.is_ascii_digit()) {
            return Pos::Other;
        }
        let after_det = prev.is_some_and(|p| DET.contains(p));
        if word.ends_with("ly") && word.len() > 4 {
            return Pos::Adverb;
        }
        if (word.ends_with("ing") && word.len() > 5) || (word.ends_with("ed") && word.len() > 4) {
            return if after_det { Pos::Adjective } else { Pos::Verb };
        }
        const ADJ: [&str; 10] = [
            "ous", "ful", "ive", "able", "ible", "ical", "less", "ish", "ic", "ary",
        ];
        if ADJ
            .iter()
            .any(|s| word.ends_with(s) && word.len() > s.len() + 2)
        {
            return Pos::Adjective;
        }
        Pos::Noun
    }
}

impl Tagger for LexiconTagger {
    fn tag(&self, words: &[String]) -> Vec<Pos> {
        let mut out: Vec<Pos> = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| words[j].as_str());
            let prev_tag = out.last().copied();
            let after_singular_noun = prev_tag == Some(Pos::Noun)
                && prev.is_some_and(|p| !p.ends_with('s') || p.ends_with("ss"));
            let third_person = after_singular_noun && w.ends_with('s') && !w.ends_with("ss");
            let tag = match self.lookup(w) {
                None if matches!(w.as_str(), "has" | "have" | "had") => {
                    let next = words.get(i + 1).map(String::as_str).unwrap_or("");
                    if next == "been" || next.ends_with("ed") || next.ends_with("en") {
                        Pos::Other
                    } else {
                        Pos::Verb
                    }
                }
                None if third_person => Pos::Verb,
                None => Self::by_suffix(w, prev),
                Some([only]) => *only,
                Some(tags) => {
                    let (default, alt) = (tags[0], tags[1]);
                    let nominal =
                        prev.is_some_and(|p| DET.contains(p)) || prev_tag == Some(Pos::Adjective);
                    let verbal = prev.is_some_and(|p| CUE.contains(p));
                    let copula = prev.is_some_and(|p| COP.contains(p));
                    if nominal && matches!(alt, Pos::Noun | Pos::Adjective) && default == Pos::Verb
                    {
                        alt
                    } else if nominal && alt == Pos::Noun && default == Pos::Adverb {
                        alt
                    } else if alt == Pos::Verb && (verbal || third_person) {
                        alt
                    } else if alt == Pos::Adverb && prev_tag == Some(Pos::Verb) {
                        alt
                    } else if copula && alt == Pos::Adjective && default != Pos::Verb {
                        alt
                    } else {
                        default
                    }
                }
            };
            out.push(tag);
        }
        out
    }
}
