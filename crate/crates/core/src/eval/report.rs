use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{
    dense_map, m_at_kiou, match_cell, panoptic_quality, predictions_to_map, CaptionScorers,
    EvalError, EvalImage, ExternalScores, MAtK, PqAveraging, PqResult, Prediction, Prepared,
    Ranking, Result, ThresholdGrid,
};
use crate::dataset::GroundTruth;
use crate::metrics::{Meteor, Tokenizer};
use crate::panoptic::SegmentId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionDiagnostics {
    pub index: usize,
    pub rank: usize,
    pub score: Option<f64>,
    /// Match at the m@kIoU cell.
    pub gt: Option<SegmentId>,
    pub iou: f64,
    pub meteor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageDiagnostics {
    pub image_id: u64,
    pub predictions: Vec<PredictionDiagnostics>,
    pub unmatched_gt: Vec<SegmentId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub grid: ThresholdGrid,
    pub ranking: Ranking,
    pub num_images: usize,
    pub num_gt: usize,
    pub num_predictions: usize,
    pub ap_grid: Vec<Vec<Option<f64>>>,
    pub map: Option<f64>,
    pub m_at_k: MAtK,
    pub pq: Option<PqResult>,
    pub notes: Vec<String>,
    pub images: Vec<ImageDiagnostics>,
}

/// Read-only evaluation settings.
#[derive(Debug)]
pub struct Evaluator {
    pub grid: ThresholdGrid,
    pub k: f64,
    pub meteor: Meteor,
    pub tokenizer: Tokenizer,
    pub external: Option<ExternalScores>,
    pub pq_averaging: PqAveraging,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator {
            grid: ThresholdGrid::default(),
            k: 0.5,
            meteor: Meteor::default(),
            tokenizer: Tokenizer::default(),
            external: None,
            pq_averaging: PqAveraging::Pooled,
        }
    }
}

impl Evaluator {
    /// Evaluates `preds` (keyed by image id) against every image of `gt`. Images without
    /// predictions contribute only false negatives.
    pub fn evaluate(
        &self,
        gt: &GroundTruth,
        preds: &BTreeMap<u64, Vec<Prediction>>,
    ) -> Result<EvalReport> {
        self.grid.validate()?;
        if !(self.k > 0.0 && self.k <= 1.0) {
            return Err(EvalError::InvalidGrid(format!(
                "k = {} out of range",
                self.k
            )));
        }
        let known: std::collections::BTreeSet<u64> =
            gt.images.iter().map(|im| im.image_id).collect();
        if let Some(id) = preds.keys().find(|id| !known.contains(id)) {
            return Err(EvalError::Consistency(format!(
                "predictions refer to unknown image {id}"
            )));
        }
        let empty: Vec<Prediction> = Vec::new();
        let images: Vec<EvalImage<'_>> = gt
            .images
            .iter()
            .map(|im| EvalImage {
                image_id: im.image_id,
                gt: &im.map,
                captions: &im.captions,
                preds: preds.get(&im.image_id).unwrap_or(&empty),
            })
            .collect();

        let min_iou = self.grid.iou_thresholds[0].min(self.k);
        let prepared = Prepared::new(&images, &self.meteor, &self.tokenizer, min_iou)?;
        let mut notes = Vec::new();
        if prepared.ranking == Ranking::FileOrder {
            notes.push("some predictions have no score; ranked in file order".to_string());
        }

        let dense = dense_map(&prepared, &self.grid);
        notes.extend(dense.notes.iter().cloned());
        let scorers = CaptionScorers {
            external: self.external.as_ref(),
        };
        let m_at_k = m_at_kiou(&prepared, self.k, &scorers)?;
        notes.extend(m_at_k.notes.iter().cloned());

        let pq = self.pq(gt, &images, &mut notes)?;
        let images_diag = diagnostics(&prepared, self.k);
        Ok(EvalReport {
            grid: self.grid.clone(),
            ranking: prepared.ranking,
            num_images: images.len(),
            num_gt: prepared.num_gt,
            num_predictions: prepared.num_predictions,
            ap_grid: dense.ap_grid,
            map: dense.map,
            m_at_k,
            pq,
            notes,
            images: images_diag,
        })
    }

    fn pq(
        &self,
        gt: &GroundTruth,
        images: &[EvalImage<'_>],
        notes: &mut Vec<String>,
    ) -> Result<Option<PqResult>> {
        if images
            .iter()
            .flat_map(|im| im.preds)
            .any(|p| p.category_id.is_none())
        {
            notes.push("PQ skipped: not every prediction has a category_id".into());
            return Ok(None);
        }
        let is_thing: BTreeMap<u32, bool> = gt
            .index
            .categories
            .iter()
            .map(|c| (c.id, c.is_thing))
            .collect();
        let mut maps = Vec::with_capacity(images.len());
        for im in images {
            let (w, h) = im.gt.dims();
            match predictions_to_map(w, h, im.preds, &is_thing) {
                Ok(m) => maps.push(m),
                Err(EvalError::Format(msg)) => {
                    notes.push(format!("PQ skipped: image {}: {msg}", im.image_id));
                    return Ok(None);
                }
                Err(e) => return Err(e),
            }
        }
        let pairs: Vec<_> = images.iter().zip(&maps).map(|(im, m)| (im.gt, m)).collect();
        panoptic_quality(&pairs, self.pq_averaging).map(Some)
    }
}

fn diagnostics(prepared: &Prepared, k: f64) -> Vec<ImageDiagnostics> {
    let cell = match_cell(prepared, k, None);
    let mut out: Vec<ImageDiagnostics> = prepared
        .images
        .iter()
        .map(|im| ImageDiagnostics {
            image_id: im.image_id,
            predictions: Vec::new(),
            unmatched_gt: Vec::new(),
        })
        .collect();
    let index: BTreeMap<u64, usize> = out
        .iter()
        .enumerate()
        .map(|(i, d)| (d.image_id, i))
        .collect();
    let mut matched: Vec<std::collections::BTreeSet<SegmentId>> =
        vec![Default::default(); out.len()];
    for e in &cell.entries {
        let i = index[&e.image_id];
        if let Some(g) = e.gt {
            matched[i].insert(g);
        }
        out[i].predictions.push(PredictionDiagnostics {
            index: e.prediction,
            rank: e.rank,
            score: prepared.images[i].pred_scores[e.prediction],
            gt: e.gt,
            iou: e.iou,
            meteor: e.meteor,
        });
    }
    for (i, d) in out.iter_mut().enumerate() {
        d.predictions.sort_by_key(|p| p.index);
        d.unmatched_gt = prepared.images[i]
            .gt_ids
            .iter()
            .copied()
            .filter(|g| !matched[i].contains(g))
            .collect();
    }
    out
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{:.1}", 100.0 * v))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text summary with percentages to one decimal.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "images {}  gt {}  predictions {}  ranking {:?}",
            self.num_images, self.num_gt, self.num_predictions, self.ranking
        );
        let _ = write!(s, "{:>8}", "iou\\met");
        for m in &self.grid.meteor_thresholds {
            let _ = write!(s, "{m:>7.2}");
        }
        s.push('\n');
        for (i, row) in self.ap_grid.iter().enumerate() {
            let _ = write!(s, "{:>8.2}", self.grid.iou_thresholds[i]);
            for v in row {
                let _ = write!(s, "{:>7}", pct(*v));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "mAP {}", pct(self.map));
        let _ = writeln!(
            s,
            "m@{}IoU  tp {} fp {} fn {}  factor {}",
            self.m_at_k.k,
            self.m_at_k.tp,
            self.m_at_k.fp,
            self.m_at_k.fn_,
            pct(self.m_at_k.factor)
        );
        for (name, m) in &self.m_at_k.metrics {
            let _ = writeln!(s, "  {name:<10} {:>6} (raw {})", pct(m.value), pct(m.raw));
        }
        if let Some(pq) = &self.pq {
            let one = |v: Option<f64>| v.map_or("n/a".into(), |v| format!("{v:.1}"));
            let _ = writeln!(
                s,
                "PQ {}  SQ {}  RQ {}  PQ_th {}  PQ_st {}",
                one(pq.pq),
                one(pq.sq),
                one(pq.rq),
                one(pq.pq_th),
                one(pq.pq_st)
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}
