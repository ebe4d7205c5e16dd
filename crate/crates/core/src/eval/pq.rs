use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{EvalError, Prediction, Result};
use crate::panoptic::{intersections_with_map, PanopticError, PanopticLabelMap, SegmentInfo};

/// How per-segment counts become a single number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PqAveraging {
    /// One pool of TP/FP/FN over all segments; PQ = SQ × RQ holds exactly.
    #[default]
    Pooled,
    /// PQ per category, then the unweighted mean (the COCO panoptic convention).
    PerCategory,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PqCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub iou_sum: f64,
}

impl PqCounts {
    fn add(&mut self, o: &PqCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.iou_sum += o.iou_sum;
    }

    fn is_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    /// `(pq, sq, rq)` in percent; `None` when nothing was counted.
    pub fn scores(&self) -> Option<(f64, f64, f64)> {
        if self.is_empty() {
            return None;
        }
        let den = self.tp as f64 + 0.5 * self.fp as f64 + 0.5 * self.fn_ as f64;
        let pq = self.iou_sum / den;
        let rq = self.tp as f64 / den;
        let sq = if self.tp == 0 {
            0.0
        } else {
            self.iou_sum / self.tp as f64
        };
        Some((100.0 * pq, 100.0 * sq, 100.0 * rq))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqCategory {
    pub category_id: u32,
    pub is_thing: bool,
    #[serde(flatten)]
    pub counts: PqCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqResult {
    pub averaging: PqAveraging,
    pub pq: Option<f64>,
    pub sq: Option<f64>,
    pub rq: Option<f64>,
    pub pq_th: Option<f64>,
    pub sq_th: Option<f64>,
    pub rq_th: Option<f64>,
    pub pq_st: Option<f64>,
    pub sq_st: Option<f64>,
    pub rq_st: Option<f64>,
    /// `|PQ - SQ·RQ/100|` of the overall numbers.
    pub identity_residual: Option<f64>,
    pub per_category: Vec<PqCategory>,
}

/// Rasterizes predictions into a label map with segment ids `1..=n` in input order.
/// Every prediction needs a category; overlapping masks are a format error.
pub fn predictions_to_map(
    width: u32,
    height: u32,
    preds: &[Prediction],
    is_thing: &BTreeMap<u32, bool>,
) -> Result<PanopticLabelMap> {
    let parts = preds
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let category_id = p
                .category_id
                .ok_or_else(|| EvalError::Format(format!("prediction {k} has no category_id")))?;
            let thing = *is_thing.get(&category_id).ok_or_else(|| {
                EvalError::Consistency(format!("prediction {k}: unknown category {category_id}"))
            })?;
            Ok((
                SegmentInfo {
                    id: k as u32 + 1,
                    category_id,
                    is_thing: thing,
                    area: p.mask.area(),
                },
                p.mask.clone(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    PanopticLabelMap::from_masks(width, height, &parts).map_err(|e| match e {
        PanopticError::Overlap { x, y } => {
            EvalError::Format(format!("prediction segments overlap at ({x}, {y})"))
        }
        other => other.into(),
    })
}

fn image_counts(
    gt: &PanopticLabelMap,
    pred: &PanopticLabelMap,
    into: &mut BTreeMap<u32, PqCategory>,
) -> Result<()> {
    let table = intersections_with_map(gt, pred)?;
    fn entry(
        into: &mut BTreeMap<u32, PqCategory>,
        category_id: u32,
        is_thing: bool,
    ) -> &mut PqCategory {
        into.entry(category_id).or_insert(PqCategory {
            category_id,
            is_thing,
            counts: PqCounts::default(),
        })
    }
    let mut matched_gt = HashSet::new();
    let mut matched_pred = HashSet::new();
    for (&(g, p), &inter) in &table.counts {
        let (gs, ps) = (
            gt.segment(g).expect("gt id"),
            pred.segment(p).expect("pred id"),
        );
        if gs.category_id != ps.category_id {
            continue;
        }
        let void = table.pred_on_void.get(&p).copied().unwrap_or(0);
        let union = gs.area + ps.area - inter - void;
        let iou = inter as f64 / union as f64;
        if iou > 0.5 {
            matched_gt.insert(g);
            matched_pred.insert(p);
            let c = &mut entry(into, gs.category_id, gs.is_thing).counts;
            c.tp += 1;
            c.iou_sum += iou;
        }
    }
    for s in gt.segments().filter(|s| !matched_gt.contains(&s.id)) {
        entry(into, s.category_id, s.is_thing).counts.fn_ += 1;
    }
    for s in pred.segments().filter(|s| !matched_pred.contains(&s.id)) {
        let void = table.pred_on_void.get(&s.id).copied().unwrap_or(0);
        if void as f64 / s.area as f64 > 0.5 {
            continue;
        }
        entry(into, s.category_id, s.is_thing).counts.fp += 1;
    }
    Ok(())
}

/// Panoptic Quality over `(ground truth, prediction)` label-map pairs, in percent.
///
/// A pair matches when categories agree and IoU exceeds 0.5; prediction pixels on ground-truth
/// void are left out of the union. Unmatched predictions lying mostly on void are ignored.
pub fn panoptic_quality(
    pairs: &[(&PanopticLabelMap, &PanopticLabelMap)],
    averaging: PqAveraging,
) -> Result<PqResult> {
    let mut cats: BTreeMap<u32, PqCategory> = BTreeMap::new();
    for (gt, pred) in pairs {
        image_counts(gt, pred, &mut cats)?;
    }
    let per_category: Vec<PqCategory> = cats.into_values().collect();

    let summarize = |filter: &dyn Fn(&PqCategory) -> bool| -> Option<(f64, f64, f64)> {
        match averaging {
            PqAveraging::Pooled => {
                let mut total = PqCounts::default();
                per_category
                    .iter()
                    .filter(|c| filter(c))
                    .for_each(|c| total.add(&c.counts));
                total.scores()
            }
            PqAveraging::PerCategory => {
                let s: Vec<_> = per_category
                    .iter()
                    .filter(|c| filter(c))
                    .filter_map(|c| c.counts.scores())
                    .collect();
                (!s.is_empty()).then(|| {
                    let n = s.len() as f64;
                    (
                        s.iter().map(|v| v.0).sum::<f64>() / n,
                        s.iter().map(|v| v.1).sum::<f64>() / n,
                        s.iter().map(|v| v.2).sum::<f64>() / n,
                    )
                })
            }
        }
    };
    let all = summarize(&|_| true);
    let th = summarize(&|c| c.is_thing);
    let st = summarize(&|c| !c.is_thing);
    Ok(PqResult {
        averaging,
        pq: all.map(|v| v.0),
        sq: all.map(|v| v.1),
        rq: all.map(|v| v.2),
        pq_th: th.map(|v| v.0),
        sq_th: th.map(|v| v.1),
        rq_th: th.map(|v| v.2),
        pq_st: st.map(|v| v.0),
        sq_st: st.map(|v| v.1),
        rq_st: st.map(|v| v.2),
        identity_residual: all.map(|(pq, sq, rq)| (pq - sq * rq / 100.0).abs()),
        per_category,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: u32, ids: &[u32], cat: impl Fn(u32) -> (u32, bool)) -> PanopticLabelMap {
        PanopticLabelMap::from_ids(w, ids.len() as u32 / w, ids.to_vec(), cat).unwrap()
    }

    #[test]
    fn identity_is_hundred() {
        let gt = map(4, &[1, 1, 2, 2, 3, 3, 3, 0], |id| (id, id != 3));
        let r = panoptic_quality(&[(&gt, &gt)], PqAveraging::Pooled).unwrap();
        assert_eq!((r.pq, r.sq, r.rq), (Some(100.0), Some(100.0), Some(100.0)));
        assert_eq!(r.pq_st, Some(100.0));
    }

    #[test]
    fn empty_prediction_is_zero() {
        let gt = map(2, &[1, 1], |_| (1, true));
        let pred = map(2, &[0, 0], |_| (1, true));
        let r = panoptic_quality(&[(&gt, &pred)], PqAveraging::Pooled).unwrap();
        assert_eq!(r.pq, Some(0.0));
        assert_eq!(r.pq_st, None);
    }

    #[test]
    fn single_pair_at_iou_point_six() {
        // gt covers 5 pixels, prediction 3 of them plus nothing else: iou 3/5.
        let gt = map(5, &[1, 1, 1, 1, 1], |_| (1, true));
        let pred = map(5, &[1, 1, 1, 0, 0], |_| (1, true));
        let r = panoptic_quality(&[(&gt, &pred)], PqAveraging::Pooled).unwrap();
        assert!((r.pq.unwrap() - 60.0).abs() < 1e-9);
        assert!(r.identity_residual.unwrap() < 1e-9);
    }

    #[test]
    fn prediction_on_void_is_ignored() {
        let gt = map(4, &[1, 1, 0, 0], |_| (1, true));
        let pred = map(4, &[1, 1, 2, 2], |_| (1, true));
        let r = panoptic_quality(&[(&gt, &pred)], PqAveraging::Pooled).unwrap();
        assert_eq!(r.pq, Some(100.0));
    }

    #[test]
    fn category_mismatch_is_fp_and_fn() {
        let gt = map(2, &[1, 1], |_| (1, true));
        let pred = map(2, &[1, 1], |_| (2, true));
        let r = panoptic_quality(&[(&gt, &pred)], PqAveraging::PerCategory).unwrap();
        assert_eq!(r.pq, Some(0.0));
        assert_eq!(r.per_category.len(), 2);
    }
}
