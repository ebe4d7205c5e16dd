use std::collections::HashMap;

use super::{MetricError, NgramProfile, TokenSequence, MAX_NGRAM};

/// Document frequencies of reference n-grams; one document is one reference set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusDfTable {
    df: HashMap<Vec<String>, u32>,
    document_count: usize,
}

impl CorpusDfTable {
    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn df(&self, gram: &[String]) -> u32 {
        self.df.get(gram).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.document_count == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, u32)> {
        self.df.iter().map(|(g, &c)| (g, c))
    }
}

/// Counts, for each n-gram, the reference sets containing it at least once.
pub fn build_df(references: &[Vec<TokenSequence>]) -> CorpusDfTable {
    let mut df: HashMap<Vec<String>, u32> = HashMap::new();
    for refs in references {
        let mut grams: Vec<&[String]> = Vec::new();
        for r in refs {
            for n in 1..=MAX_NGRAM {
                grams.extend(r.windows(n));
            }
        }
        grams.sort_unstable();
        grams.dedup();
        for g in grams {
            *df.entry(g.to_vec()).or_insert(0) += 1;
        }
    }
    CorpusDfTable {
        df,
        document_count: references.len(),
    }
}

struct TfIdf {
    vec: [HashMap<Vec<String>, f64>; MAX_NGRAM],
    norm: [f64; MAX_NGRAM],
    len: usize,
}

/// CIDEr-D: clipped tf-idf cosine per order with a Gaussian length penalty (σ = 6), averaged
/// over n = 1..=4, averaged over references and scaled by 10.
#[derive(Debug, Clone)]
pub struct CiderD {
    df: CorpusDfTable,
    log_docs: f64,
    pub sigma: f64,
}

impl CiderD {
    pub fn new(df: CorpusDfTable) -> Result<Self, MetricError> {
        if df.is_empty() {
            return Err(MetricError::EmptyDfTable);
        }
        Ok(Self {
            log_docs: (df.document_count as f64).ln(),
            df,
            sigma: 6.0,
        })
    }

    pub fn df_table(&self) -> &CorpusDfTable {
        &self.df
    }

    fn tfidf(&self, tokens: &[String]) -> TfIdf {
        let profile = NgramProfile::new(tokens);
        let mut vec: [HashMap<Vec<String>, f64>; MAX_NGRAM] = Default::default();
        let mut norm = [0.0; MAX_NGRAM];
        for n in 1..=MAX_NGRAM {
            for (gram, &tf) in profile.order(n) {
                let idf = self.log_docs - (self.df.df(gram).max(1) as f64).ln();
                let w = tf as f64 * idf;
                norm[n - 1] += w * w;
                vec[n - 1].insert(gram.clone(), w);
            }
        }
        TfIdf {
            vec,
            norm: norm.map(f64::sqrt),
            len: tokens.len(),
        }
    }

    fn sim(&self, hyp: &TfIdf, reference: &TfIdf) -> f64 {
        let delta = hyp.len as f64 - reference.len as f64;
        let penalty = (-(delta * delta) / (2.0 * self.sigma * self.sigma)).exp();
        let mut total = 0.0;
        for n in 0..MAX_NGRAM {
            let mut val = 0.0;
            for (gram, &w) in &hyp.vec[n] {
                if let Some(&r) = reference.vec[n].get(gram) {
                    val += w.min(r) * r;
                }
            }
            if hyp.norm[n] != 0.0 && reference.norm[n] != 0.0 {
                val /= hyp.norm[n] * reference.norm[n];
            }
            total += val * penalty;
        }
        total / MAX_NGRAM as f64
    }

    /// Score of one candidate against its references, in `[0, 10]`.
    pub fn score(&self, candidate: &TokenSequence, references: &[TokenSequence]) -> f64 {
        if references.is_empty() {
            return 0.0;
        }
        let hyp = self.tfidf(candidate);
        let sum: f64 = references
            .iter()
            .map(|r| self.sim(&hyp, &self.tfidf(r)))
            .sum();
        sum / references.len() as f64 * 10.0
    }

    /// Per-pair scores and their mean.
    pub fn score_all(
        &self,
        candidates: &[TokenSequence],
        references: &[Vec<TokenSequence>],
    ) -> Result<(Vec<f64>, f64), MetricError> {
        if candidates.len() != references.len() {
            return Err(MetricError::LengthMismatch(
                candidates.len(),
                references.len(),
            ));
        }
        let scores: Vec<f64> = candidates
            .iter()
            .zip(references)
            .map(|(c, r)| self.score(c, r))
            .collect();
        let mean = if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        };
        Ok((scores, mean))
    }
}
