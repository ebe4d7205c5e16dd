use std::collections::HashMap;

use super::MAX_NGRAM;

/// N-gram multisets for n = 1..=4.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NgramProfile {
    counts: [HashMap<Vec<String>, u32>; MAX_NGRAM],
}

impl NgramProfile {
    pub fn new(tokens: &[String]) -> Self {
        let mut counts: [HashMap<Vec<String>, u32>; MAX_NGRAM] = Default::default();
        for (k, table) in counts.iter_mut().enumerate() {
            for w in tokens.windows(k + 1) {
                *table.entry(w.to_vec()).or_insert(0) += 1;
            }
        }
        Self { counts }
    }

    /// Multiset of `n`-grams, `n` in `1..=4`.
    pub fn order(&self, n: usize) -> &HashMap<Vec<String>, u32> {
        &self.counts[n - 1]
    }

    pub fn total(&self, n: usize) -> u64 {
        self.order(n).values().map(|&c| c as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, u32)> {
        self.counts
            .iter()
            .flat_map(|t| t.iter().map(|(g, &c)| (g, c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn totals_match_length(tokens in proptest::collection::vec("[a-c]", 0..12)) {
            let p = NgramProfile::new(&tokens);
            for n in 1..=MAX_NGRAM {
                prop_assert_eq!(p.total(n), tokens.len().saturating_sub(n - 1) as u64);
            }
        }
    }
}
