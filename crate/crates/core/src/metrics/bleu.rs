use super::{NgramProfile, TokenSequence, MAX_NGRAM};

/// Sufficient statistics for BLEU@4: clipped matches and totals per order plus lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_NGRAM],
    pub totals: [u64; MAX_NGRAM],
    pub candidate_len: u64,
    /// Length of the reference closest in length to the candidate (shorter wins ties).
    pub reference_len: u64,
}

impl BleuStats {
    pub fn new(candidate: &TokenSequence, references: &[TokenSequence]) -> Self {
        let cand = NgramProfile::new(candidate);
        let refs: Vec<NgramProfile> = references.iter().map(|r| NgramProfile::new(r)).collect();
        let mut stats = BleuStats {
            candidate_len: candidate.len() as u64,
            reference_len: closest_ref_len(candidate.len(), references),
            ..Default::default()
        };
        for n in 1..=MAX_NGRAM {
            for (gram, &count) in cand.order(n) {
                let max_ref = refs
                    .iter()
                    .filter_map(|r| r.order(n).get(gram))
                    .max()
                    .copied()
                    .unwrap_or(0);
                stats.matches[n - 1] += count.min(max_ref) as u64;
            }
            stats.totals[n - 1] = candidate.len().saturating_sub(n - 1) as u64;
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_NGRAM {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    fn brevity_penalty(&self) -> f64 {
        if self.candidate_len == 0 {
            0.0
        } else if self.candidate_len > self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        }
    }

    /// Unsmoothed score: zero as soon as any order has no match. With `epsilon`, zero-match
    /// orders use `epsilon / total` instead.
    pub fn score(&self, epsilon: Option<f64>) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_NGRAM {
            let total = self.totals[n].max(1) as f64;
            let precision = match (self.matches[n], epsilon) {
                (0, None) => return 0.0,
                (0, Some(eps)) => eps / total,
                (m, _) => m as f64 / total,
            };
            log_sum += precision.ln();
        }
        self.brevity_penalty() * (log_sum / MAX_NGRAM as f64).exp()
    }
}

fn closest_ref_len(candidate_len: usize, references: &[TokenSequence]) -> u64 {
    references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(candidate_len), len))
        .unwrap_or(0) as u64
}

/// Sentence-level BLEU@4 without smoothing.
pub fn bleu4(candidate: &TokenSequence, references: &[TokenSequence]) -> f64 {
    if candidate.is_empty() {
        log::warn!("BLEU@4 of an empty candidate is 0");
    }
    BleuStats::new(candidate, references).score(None)
}

/// Sentence-level BLEU@4 where orders with no match contribute `epsilon / total`.
pub fn bleu4_smoothed(
    candidate: &TokenSequence,
    references: &[TokenSequence],
    epsilon: f64,
) -> f64 {
    BleuStats::new(candidate, references).score(Some(epsilon))
}

/// Corpus-level BLEU@4: statistics are pooled over all pairs before the geometric mean.
pub fn corpus_bleu4<'a>(
    pairs: impl IntoIterator<Item = (&'a TokenSequence, &'a [TokenSequence])>,
) -> f64 {
    let mut total = BleuStats::default();
    for (cand, refs) in pairs {
        total.add(&BleuStats::new(cand, refs));
    }
    total.score(None)
}
