use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{match_cell, EvalError, Prepared, Result};
use crate::metrics::{build_df, corpus_bleu4, rouge_l, CiderD, TokenSequence};

/// Per-pair scores from an outside scorer (SPICE, for instance), keyed by image id and
/// prediction index within that image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores {
    pub name: String,
    pub scores: HashMap<(u64, usize), f64>,
}

impl ExternalScores {
    /// CSV with columns `image,prediction,score`; a header line and `#` comments are skipped.
    pub fn parse_csv(name: &str, text: &str) -> Result<Self> {
        let mut scores = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (n == 0 && line.starts_with("image")) {
                continue;
            }
            let bad = || EvalError::Format(format!("external scores line {}: {line:?}", n + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [image, pred, score] = fields[..] else {
                return Err(bad());
            };
            let score: f64 = score.parse().map_err(|_| bad())?;
            if !score.is_finite() {
                return Err(bad());
            }
            scores.insert(
                (
                    image.parse().map_err(|_| bad())?,
                    pred.parse().map_err(|_| bad())?,
                ),
                score,
            );
        }
        Ok(ExternalScores {
            name: name.to_string(),
            scores,
        })
    }
}

/// Scorers that need more than the prepared tables.
#[derive(Debug, Clone, Default)]
pub struct CaptionScorers<'a> {
    pub external: Option<&'a ExternalScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricAtK {
    /// The metric over true-positive pairs alone.
    pub raw: Option<f64>,
    /// `raw` scaled by `tp / (tp + fp + fn)`.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MAtK {
    pub k: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub factor: Option<f64>,
    pub metrics: BTreeMap<String, MetricAtK>,
    pub notes: Vec<String>,
}

/// Caption quality of localization-only matches at IoU `k`, discounted by the detection rate.
///
/// BLEU@4 pools n-gram statistics over all true-positive pairs; CIDEr-D uses document
/// frequencies from every ground-truth caption in the split; ROUGE-L, METEOR and external
/// scores average over pairs.
pub fn m_at_kiou(prepared: &Prepared, k: f64, scorers: &CaptionScorers<'_>) -> Result<MAtK> {
    let cell = match_cell(prepared, k, None);
    let denom = cell.tp + cell.fp + cell.fn_;
    let factor = (denom > 0).then(|| cell.tp as f64 / denom as f64);

    let pairs: Vec<(&TokenSequence, &TokenSequence, u64, usize, Option<f64>)> = cell
        .entries
        .iter()
        .filter_map(|e| {
            let g = e.gt?;
            let im = prepared
                .images
                .iter()
                .find(|im| im.image_id == e.image_id)
                .expect("entry image is prepared");
            Some((
                &im.pred_tokens[e.prediction],
                &im.gt_tokens[&g],
                e.image_id,
                e.prediction,
                e.meteor,
            ))
        })
        .collect();

    let mut notes = Vec::new();
    let mut raw: BTreeMap<String, Option<f64>> = BTreeMap::new();
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    if pairs.is_empty() {
        for name in ["bleu4", "cider_d", "meteor", "rouge_l"] {
            raw.insert(name.into(), None);
        }
    } else {
        let refs: Vec<[TokenSequence; 1]> = pairs.iter().map(|p| [p.1.clone()]).collect();
        let bleu = corpus_bleu4(pairs.iter().zip(&refs).map(|(p, r)| (p.0, &r[..])));
        raw.insert("bleu4".into(), Some(bleu));

        let documents: Vec<Vec<TokenSequence>> = prepared
            .images
            .iter()
            .flat_map(|im| im.gt_tokens.values().map(|t| vec![t.clone()]))
            .collect();
        let cider = CiderD::new(build_df(&documents))?;
        raw.insert(
            "cider_d".into(),
            mean(
                pairs
                    .iter()
                    .zip(&refs)
                    .map(|(p, r)| cider.score(p.0, r))
                    .collect(),
            ),
        );
        raw.insert(
            "rouge_l".into(),
            mean(
                pairs
                    .iter()
                    .zip(&refs)
                    .map(|(p, r)| rouge_l(p.0, r))
                    .collect(),
            ),
        );
        raw.insert(
            "meteor".into(),
            mean(
                pairs
                    .iter()
                    .map(|p| p.4.expect("meteor computed at k"))
                    .collect(),
            ),
        );
    }
    if let Some(ext) = scorers.external {
        let found: Vec<f64> = pairs
            .iter()
            .filter_map(|p| ext.scores.get(&(p.2, p.3)).copied())
            .collect();
        let value = if found.len() == pairs.len() {
            mean(found)
        } else {
            notes.push(format!(
                "{}: {} of {} true-positive pairs have no score",
                ext.name,
                pairs.len() - found.len(),
                pairs.len()
            ));
            None
        };
        raw.insert(ext.name.clone(), value);
    }
    if denom == 0 {
        notes.push("no ground truth and no predictions: m@kIoU is undefined".into());
    }

    let metrics = raw
        .into_iter()
        .map(|(name, raw)| {
            let value = match (factor, raw) {
                (None, _) => None,
                (Some(f), _) if cell.tp == 0 => Some(f),
                (Some(f), Some(m)) => Some(f * m),
                (Some(_), None) => None,
            };
            (name, MetricAtK { raw, value })
        })
        .collect();
    Ok(MAtK {
        k,
        tp: cell.tp,
        fp: cell.fp,
        fn_: cell.fn_,
        factor,
        metrics,
        notes,
    })
}
