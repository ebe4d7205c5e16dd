use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{EvalError, Prediction, Result};
use crate::metrics::{Meteor, TokenSequence, Tokenizer};
use crate::panoptic::{intersections_with_masks, PanopticLabelMap, SegmentId};

/// Ground truth and predictions of one image, borrowed.
#[derive(Debug, Clone, Copy)]
pub struct EvalImage<'a> {
    pub image_id: u64,
    pub gt: &'a PanopticLabelMap,
    pub captions: &'a BTreeMap<SegmentId, String>,
    pub preds: &'a [Prediction],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ranking {
    Score,
    FileOrder,
}

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub gt: SegmentId,
    pub iou: f64,
    /// Computed only for pairs whose IoU reaches the smallest threshold in use.
    pub meteor: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct PreparedImage {
    pub image_id: u64,
    pub gt_ids: Vec<SegmentId>,
    pub gt_tokens: BTreeMap<SegmentId, TokenSequence>,
    pub pred_tokens: Vec<TokenSequence>,
    pub pred_scores: Vec<Option<f64>>,
    /// Per prediction, overlapping gt sorted by IoU descending then gt id ascending.
    pub candidates: Vec<Vec<Candidate>>,
}

/// Per-pair IoU and METEOR tables plus the global ranking; shared by every grid cell.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub(crate) images: Vec<PreparedImage>,
    /// `(image index, prediction index)` in rank order.
    pub(crate) order: Vec<(usize, usize)>,
    pub ranking: Ranking,
    pub num_gt: usize,
    pub num_predictions: usize,
    min_iou: f64,
}

impl Prepared {
    /// `min_iou` bounds the thresholds later passed to [`match_cell`]; METEOR is skipped for
    /// pairs below it.
    pub fn new(
        images: &[EvalImage<'_>],
        meteor: &Meteor,
        tokenizer: &Tokenizer,
        min_iou: f64,
    ) -> Result<Self> {
        let prepared = images
            .par_iter()
            .map(|im| prepare_image(im, meteor, tokenizer, min_iou))
            .collect::<Result<Vec<_>>>()?;

        let ranking = if images
            .iter()
            .flat_map(|im| im.preds)
            .all(|p| p.score.is_some())
        {
            Ranking::Score
        } else {
            log::warn!("some predictions have no score; ranking the whole split in file order");
            Ranking::FileOrder
        };
        let mut order: Vec<(usize, usize)> = images
            .iter()
            .enumerate()
            .flat_map(|(i, im)| (0..im.preds.len()).map(move |k| (i, k)))
            .collect();
        if ranking == Ranking::Score {
            // Stable sort keeps input order as the last key.
            order.sort_by(|&(ia, ka), &(ib, kb)| {
                let (a, b) = (&images[ia].preds[ka], &images[ib].preds[kb]);
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| b.mask.area().cmp(&a.mask.area()))
            });
        }
        Ok(Prepared {
            num_gt: prepared.iter().map(|p| p.gt_ids.len()).sum(),
            num_predictions: order.len(),
            images: prepared,
            order,
            ranking,
            min_iou,
        })
    }

    pub fn min_iou(&self) -> f64 {
        self.min_iou
    }

    pub fn image_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.images.iter().map(|im| im.image_id)
    }
}

fn prepare_image(
    im: &EvalImage<'_>,
    meteor: &Meteor,
    tokenizer: &Tokenizer,
    min_iou: f64,
) -> Result<PreparedImage> {
    for (k, p) in im.preds.iter().enumerate() {
        if p.mask.is_empty() {
            return Err(EvalError::Format(format!(
                "image {} prediction {k}: empty mask",
                im.image_id
            )));
        }
        if let Some(s) = p.score {
            if !s.is_finite() {
                return Err(EvalError::Format(format!(
                    "image {} prediction {k}: score is not finite",
                    im.image_id
                )));
            }
        }
    }
    let masks: Vec<_> = im.preds.iter().map(|p| p.mask.clone()).collect();
    let table = intersections_with_masks(im.gt, &masks)?;
    let gt_ids: Vec<SegmentId> = im.gt.segments().map(|s| s.id).collect();
    let gt_tokens: BTreeMap<SegmentId, TokenSequence> = gt_ids
        .iter()
        .map(|&g| {
            let caption = im.captions.get(&g).map(String::as_str).unwrap_or("");
            (g, tokenizer.tokenize(caption))
        })
        .collect();
    let pred_tokens: Vec<TokenSequence> = im
        .preds
        .iter()
        .map(|p| tokenizer.tokenize(&p.caption))
        .collect();

    let mut candidates: Vec<Vec<Candidate>> = vec![Vec::new(); im.preds.len()];
    for &(g, k) in table.counts.keys() {
        let iou = table.iou(g, k);
        let k = k as usize;
        let meteor = (iou >= min_iou)
            .then(|| meteor.score(&pred_tokens[k], std::slice::from_ref(&gt_tokens[&g])));
        candidates[k].push(Candidate { gt: g, iou, meteor });
    }
    for c in &mut candidates {
        c.sort_by(|a, b| b.iou.total_cmp(&a.iou).then(a.gt.cmp(&b.gt)));
    }
    Ok(PreparedImage {
        image_id: im.image_id,
        gt_ids,
        gt_tokens,
        pred_tokens,
        pred_scores: im.preds.iter().map(|p| p.score).collect(),
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellEntry {
    pub rank: usize,
    pub image_id: u64,
    pub prediction: usize,
    pub gt: Option<SegmentId>,
    /// IoU of the matched pair, or of the best-overlapping gt for a false positive.
    pub iou: f64,
    pub meteor: Option<f64>,
}

/// Outcome of greedy matching at one `(iou_t, meteor_t)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMatch {
    pub iou_threshold: f64,
    pub meteor_threshold: Option<f64>,
    /// In rank order.
    pub entries: Vec<CellEntry>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl CellMatch {
    pub fn labels(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.gt.is_some()).collect()
    }

    pub fn num_gt(&self) -> usize {
        self.tp + self.fn_
    }
}

/// Greedy matching in rank order. A prediction takes the highest-IoU unmatched gt of its image
/// with `iou >= iou_t` and `meteor >= meteor_t`; `meteor_t = None` ignores captions.
pub fn match_cell(prepared: &Prepared, iou_t: f64, meteor_t: Option<f64>) -> CellMatch {
    assert!(
        iou_t >= prepared.min_iou,
        "threshold {iou_t} is below the prepared minimum {}",
        prepared.min_iou
    );
    let mut used: Vec<HashSet<SegmentId>> = vec![HashSet::new(); prepared.images.len()];
    let mut entries = Vec::with_capacity(prepared.order.len());
    let mut tp = 0;
    for (rank, &(i, k)) in prepared.order.iter().enumerate() {
        let im = &prepared.images[i];
        let cands = &im.candidates[k];
        let hit = cands.iter().find(|c| {
            c.iou >= iou_t
                && !used[i].contains(&c.gt)
                && meteor_t.is_none_or(|m| c.meteor.is_some_and(|v| v >= m))
        });
        let entry = match hit {
            Some(c) => {
                used[i].insert(c.gt);
                tp += 1;
                CellEntry {
                    rank,
                    image_id: im.image_id,
                    prediction: k,
                    gt: Some(c.gt),
                    iou: c.iou,
                    meteor: c.meteor,
                }
            }
            None => CellEntry {
                rank,
                image_id: im.image_id,
                prediction: k,
                gt: None,
                iou: cands.first().map_or(0.0, |c| c.iou),
                meteor: cands.first().and_then(|c| c.meteor),
            },
        };
        entries.push(entry);
    }
    CellMatch {
        iou_threshold: iou_t,
        meteor_threshold: meteor_t,
        fp: entries.len() - tp,
        fn_: prepared.num_gt - tp,
        entries,
        tp,
    }
}
