//! On-disk ground-truth and prediction formats.
//!
//! Ground truth is a directory holding id-encoded PNGs plus a JSON index:
//!
//! ```json
//! {
//!   "images":     [{"id": 1, "file_name": "1.jpg", "panoptic_file": "1.png", "width": 4, "height": 2}],
//!   "categories": [{"id": 1, "name": "person", "is_thing": true}],
//!   "segments":   [{"image": 1, "id": 298, "category_id": 1, "area": 8, "caption": "..."}]
//! }
//! ```
//!
//! COCO panoptic JSON (`annotations[].segments_info[]`, `isthing`) is accepted as well and
//! converted on load; a `caption` field inside `segments_info` is picked up when present.
//!
//! Predictions are a JSON array of per-image records:
//!
//! ```json
//! [{"image": 1, "objects": [{"mask": {"size": [2, 4], "counts": [0, 8]}, "caption": "...", "score": 0.9}]}]
//! ```
//!
//! where `mask` is either a run-length object or `{"png": "relative/path.png", "id": 298}`
//! selecting the pixels of one id (any nonzero pixel when `id` is absent).

mod index;
mod predictions;
mod validate;

pub use index::{
    load_ground_truth, load_gt_image, Category, DatasetIndex, GroundTruth, GtImage, ImageRecord,
    SegmentRecord,
};
pub use predictions::{load_predictions, MaskRef, ObjectRecord, PredictionRecord};
pub use validate::{validate_dataset, validate_predictions, Severity, ValidationReport, Violation};

use std::path::PathBuf;

use crate::panoptic::PanopticError;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("consistency error in image {image}: {message}")]
    Consistency { image: u64, message: String },
    #[error("image {image}")]
    Panoptic { image: u64, source: PanopticError },
}

impl DatasetError {
    /// Consistency problems (as opposed to unreadable or malformed input).
    pub fn is_consistency(&self) -> bool {
        match self {
            DatasetError::Consistency { .. } => true,
            DatasetError::Panoptic { source, .. } => matches!(
                source,
                PanopticError::Consistency(_) | PanopticError::NotFound(_)
            ),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, DatasetError>;

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `error: cause: cause` on one line, for reports that store messages as text.
pub(crate) fn error_chain(e: &dyn std::error::Error) -> String {
    let mut s = e.to_string();
    let mut cur = e.source();
    while let Some(c) = cur {
        s.push_str(": ");
        s.push_str(&c.to_string());
        cur = c.source();
    }
    s
}
