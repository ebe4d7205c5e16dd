use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rust_stemmers::{Algorithm, Stemmer};

use super::{MetricError, TokenSequence};

/// Optional synonym source for a third alignment stage.
///
/// Each line of the text form is one synonym group of whitespace-separated words; membership is
/// symmetric within a group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    groups: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    pub fn from_groups<I, G, S>(groups: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = SynonymTable::default();
        for group in groups {
            let words: BTreeSet<String> =
                group.into_iter().map(|s| s.into().to_lowercase()).collect();
            for w in &words {
                table
                    .groups
                    .entry(w.clone())
                    .or_default()
                    .extend(words.iter().cloned());
            }
        }
        table
    }

    pub fn parse(text: &str) -> Result<Self, MetricError> {
        let groups: Vec<Vec<&str>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.split_whitespace().collect())
            .collect();
        if let Some(g) = groups.iter().find(|g| g.len() < 2) {
            return Err(MetricError::Synonyms(format!(
                "group {:?} needs at least two words",
                g.join(" ")
            )));
        }
        Ok(Self::from_groups(groups))
    }

    fn are_synonyms(&self, a: &str, b: &str) -> bool {
        a == b || self.groups.get(a).is_some_and(|g| g.contains(b))
    }
}

/// METEOR with exact and stem alignment stages (plus synonyms when a table is loaded).
///
/// Each stage walks the still-unaligned candidate words from last to first and pairs each with
/// the right-most still-unaligned reference word it matches. The score is
/// `F_mean · (1 − γ·(chunks/matches)^β)` with `F_mean = P·R / (α·P + (1 − α)·R)`, taken as
/// the best over references.
pub struct Meteor {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    stemmer: Stemmer,
    synonyms: Option<SynonymTable>,
}

impl fmt::Debug for Meteor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Meteor")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("gamma", &self.gamma)
            .field("synonyms", &self.synonyms.is_some())
            .finish()
    }
}

impl Default for Meteor {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
            stemmer: Stemmer::create(Algorithm::English),
            synonyms: None,
        }
    }
}

impl Meteor {
    pub fn with_synonyms(mut self, table: SynonymTable) -> Self {
        self.synonyms = Some(table);
        self
    }

    pub fn stem<'a>(&self, word: &'a str) -> std::borrow::Cow<'a, str> {
        self.stemmer.stem(word)
    }

    /// Aligned `(candidate index, reference index)` pairs sorted by candidate index.
    pub fn align(&self, candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
        let mut cand_left: Vec<usize> = (0..candidate.len()).collect();
        let mut ref_left: Vec<usize> = (0..reference.len()).collect();
        let mut matches = Vec::new();

        let mut stage = |same: &dyn Fn(usize, usize) -> bool,
                         cand_left: &mut Vec<usize>,
                         ref_left: &mut Vec<usize>| {
            let mut cand_matched = vec![false; cand_left.len()];
            for ci in (0..cand_left.len()).rev() {
                let c = cand_left[ci];
                if let Some(ri) = (0..ref_left.len()).rev().find(|&ri| same(c, ref_left[ri])) {
                    matches.push((c, ref_left[ri]));
                    ref_left.remove(ri);
                    cand_matched[ci] = true;
                }
            }
            let mut k = 0;
            cand_left.retain(|_| {
                k += 1;
                !cand_matched[k - 1]
            });
        };

        stage(
            &|c, r| candidate[c] == reference[r],
            &mut cand_left,
            &mut ref_left,
        );

        let cand_stems: Vec<String> = candidate
            .iter()
            .map(|w| self.stem(w).into_owned())
            .collect();
        let ref_stems: Vec<String> = reference
            .iter()
            .map(|w| self.stem(w).into_owned())
            .collect();
        stage(
            &|c, r| cand_stems[c] == ref_stems[r],
            &mut cand_left,
            &mut ref_left,
        );

        if let Some(table) = &self.synonyms {
            stage(
                &|c, r| table.are_synonyms(&candidate[c], &reference[r]),
                &mut cand_left,
                &mut ref_left,
            );
        }

        matches.sort_unstable();
        matches
    }

    fn score_single(&self, candidate: &[String], reference: &[String]) -> f64 {
        if candidate.is_empty() || reference.is_empty() {
            return 0.0;
        }
        let matches = self.align(candidate, reference);
        if matches.is_empty() {
            return 0.0;
        }
        let m = matches.len() as f64;
        let precision = m / candidate.len() as f64;
        let recall = m / reference.len() as f64;
        let fmean = precision * recall / (self.alpha * precision + (1.0 - self.alpha) * recall);
        let chunks = 1 + matches
            .windows(2)
            .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
            .count();
        let penalty = self.gamma * (chunks as f64 / m).powf(self.beta);
        (1.0 - penalty) * fmean
    }

    /// Best score over references; 0 for an empty candidate.
    pub fn score(&self, candidate: &TokenSequence, references: &[TokenSequence]) -> f64 {
        references
            .iter()
            .map(|r| self.score_single(candidate, r))
            .fold(0.0, f64::max)
    }
}
