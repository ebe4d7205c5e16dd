//! Dense-caption evaluation: greedy matching over an IoU × METEOR threshold grid, AP and mAP,
//! the m@kIoU caption scores and Panoptic Quality.
//!
//! Predictions are ranked once over the whole split (score descending, then mask area
//! descending, then input order) and every grid cell reuses that ranking.

mod ap;
mod captions;
mod matching;
mod pq;
mod report;

pub use ap::{ap_from_labels, average_precision, dense_map, DenseMap};
pub use captions::{m_at_kiou, CaptionScorers, ExternalScores, MAtK, MetricAtK};
pub use matching::{match_cell, CellEntry, CellMatch, EvalImage, Prepared, Ranking};
pub use pq::{panoptic_quality, predictions_to_map, PqAveraging, PqCategory, PqCounts, PqResult};
pub use report::{EvalReport, Evaluator, ImageDiagnostics, PredictionDiagnostics};

use serde::{Deserialize, Serialize};

use crate::metrics::MetricError;
use crate::panoptic::{BinaryMask, PanopticError};

/// One predicted region with its caption.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mask: BinaryMask,
    pub caption: String,
    /// Ranking confidence in `[0, 1]`. When any prediction lacks one, the whole split is ranked
    /// in file order.
    pub score: Option<f64>,
    /// Needed only for Panoptic Quality.
    pub category_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub iou_thresholds: Vec<f64>,
    pub meteor_thresholds: Vec<f64>,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid {
            iou_thresholds: vec![0.3, 0.4, 0.5, 0.6, 0.7],
            meteor_thresholds: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25],
        }
    }
}

impl ThresholdGrid {
    pub fn new(iou_thresholds: Vec<f64>, meteor_thresholds: Vec<f64>) -> Result<Self> {
        let grid = ThresholdGrid {
            iou_thresholds,
            meteor_thresholds,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        fn increasing(name: &str, v: &[f64], low_open: bool) -> Result<()> {
            if v.is_empty() {
                return Err(EvalError::InvalidGrid(format!(
                    "{name} thresholds are empty"
                )));
            }
            for &t in v {
                let ok = t.is_finite() && t <= 1.0 && if low_open { t > 0.0 } else { t >= 0.0 };
                if !ok {
                    return Err(EvalError::InvalidGrid(format!(
                        "{name} threshold {t} out of range"
                    )));
                }
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(EvalError::InvalidGrid(format!(
                    "{name} thresholds must be strictly increasing"
                )));
            }
            Ok(())
        }
        increasing("iou", &self.iou_thresholds, true)?;
        increasing("meteor", &self.meteor_thresholds, false)
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.iou_thresholds
            .iter()
            .flat_map(move |&i| self.meteor_thresholds.iter().map(move |&m| (i, m)))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error(transparent)]
    Panoptic(#[from] PanopticError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
