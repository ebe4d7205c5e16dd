use serde::Serialize;

use super::{match_cell, CellMatch, Prepared, ThresholdGrid};

/// All-point interpolated AP of ranked TP/FP labels. `None` when there is no ground truth.
pub fn ap_from_labels(labels: &[bool], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(labels.len());
    for (i, &hit) in labels.iter().enumerate() {
        if hit {
            tp += 1;
        }
        precision.push(tp as f64 / (i + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    // Recall rises by 1/num_gt exactly at each true positive.
    let area: f64 = labels
        .iter()
        .zip(&precision)
        .filter(|(hit, _)| **hit)
        .map(|(_, p)| p)
        .sum();
    Some(area / num_gt as f64)
}

pub fn average_precision(cell: &CellMatch) -> Option<f64> {
    ap_from_labels(&cell.labels(), cell.num_gt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseMap {
    /// `ap_grid[i][j]` is the AP at `iou_thresholds[i]`, `meteor_thresholds[j]`.
    pub ap_grid: Vec<Vec<Option<f64>>>,
    pub map: Option<f64>,
    pub notes: Vec<String>,
}

/// AP at every grid cell and their mean. Cells without ground truth are left out of the mean.
pub fn dense_map(prepared: &Prepared, grid: &ThresholdGrid) -> DenseMap {
    use rayon::prelude::*;

    let ap_grid: Vec<Vec<Option<f64>>> = grid
        .iou_thresholds
        .par_iter()
        .map(|&iou_t| {
            grid.meteor_thresholds
                .iter()
                .map(|&m| average_precision(&match_cell(prepared, iou_t, Some(m))))
                .collect()
        })
        .collect();
    let defined: Vec<f64> = ap_grid.iter().flatten().filter_map(|v| *v).collect();
    let total = ap_grid.iter().map(Vec::len).sum::<usize>();
    let mut notes = Vec::new();
    if defined.len() < total {
        notes.push(format!(
            "{} of {total} cells have no ground truth and are excluded from mAP",
            total - defined.len()
        ));
    }
    let map = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    DenseMap {
        ap_grid,
        map,
        notes,
    }
}
