//! Toolkit for the panoptic segmentation-captioning benchmark.
//!
//! The crate is organised bottom-up:
//!
//! - [`panoptic`]: id-map codec, label maps, binary masks, run-length masks and IoU kernels.
//! - [`metrics`]: caption similarity scorers (BLEU@4, ROUGE-L, METEOR, CIDEr-D).
//! - [`eval`]: prediction matching, the dual-threshold mAP grid, m@kIoU and Panoptic Quality.
//! - [`som`]: Set-of-Mark overlay rendering.
//! - [`annotate`]: prompt construction, LMM endpoint calls with replay, response parsing and filtering.
//! - [`stats`]: corpus statistics for captioned datasets.
//! - [`dataset`]: on-disk ground-truth and prediction formats.

pub mod annotate;
pub mod dataset;
pub mod eval;
pub mod metrics;
pub mod panoptic;
pub mod som;
pub mod stats;
