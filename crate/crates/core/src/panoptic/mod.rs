//! Panoptic data model.
//!
//! Ground truth is stored as 24-bit id-encoded RGB rasters (`id = R + 256·G + 256²·B`) next to
//! a segment table. Pixels with id 0 are void and take part in no intersection and no union.

mod codec;
mod intersect;
mod labelmap;
mod mask;
mod rle;

pub use codec::{decode_id, encode_id, RgbIdPng, MAX_SEGMENT_ID};
pub use intersect::{intersections_with_map, intersections_with_masks, IntersectionTable};
pub use labelmap::{
    consistency_issues, load_panoptic, AreaCheck, ConsistencyIssue, PanopticLabelMap, SegmentInfo,
};
pub use mask::{iou, BinaryMask};
pub use rle::{Rle, RleCounts, RleOrder};

/// Segment identifier as stored in the id map.
pub type SegmentId = u32;

#[derive(Debug, thiserror::Error)]
pub enum PanopticError {
    #[error("segment id {0} is outside [0, 2^24)")]
    IdOutOfRange(u64),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("invalid dimensions {0}x{1}")]
    Dimensions(u32, u32),
    #[error("segment {0} not present in label map")]
    NotFound(SegmentId),
    #[error("consistency error: {0}")]
    Consistency(ConsistencyIssue),
    #[error("run-length mask: {0}")]
    Rle(String),
    #[error("overlapping segments at pixel ({x}, {y})")]
    Overlap { x: u32, y: u32 },
    #[error("image: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PanopticError>;
