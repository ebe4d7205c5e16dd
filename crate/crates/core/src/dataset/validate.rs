use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use super::{error_chain, read_file, DatasetIndex, GroundTruth, PredictionRecord};
use crate::panoptic::{consistency_issues, RgbIdPng, SegmentInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Consistency,
    Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, image: Option<u64>, message: impl Into<String>) {
        self.violations.push(Violation {
            severity,
            image,
            message: message.into(),
        });
    }

    pub fn worst(&self) -> Option<Severity> {
        self.violations.iter().map(|v| v.severity).max()
    }

    pub fn is_clean(&self) -> bool {
        self.worst().is_none_or(|s| s == Severity::Warning)
    }
}

/// Checks an index against the PNGs under `dir`: every pixel id listed, every listed area
/// matching the pixel count, captions present.
pub fn validate_dataset(dir: &Path, index: &DatasetIndex) -> ValidationReport {
    let mut report = ValidationReport::default();
    for e in index.structural_errors() {
        report.push(Severity::Format, None, e);
    }
    let categories = index.category_map();
    let by_image = index.segments_by_image();
    for im in &index.images {
        let segs = by_image.get(&im.id).map(Vec::as_slice).unwrap_or(&[]);
        for s in segs {
            if s.caption.as_deref().is_none_or(|c| c.trim().is_empty()) {
                report.push(
                    Severity::Consistency,
                    Some(im.id),
                    format!("segment {} has an empty caption", s.id),
                );
            }
        }
        let path = dir.join(&im.panoptic_file);
        let png = match read_file(&path)
            .map_err(|e| error_chain(&e))
            .and_then(|b| RgbIdPng::from_png_bytes(&b).map_err(|e| error_chain(&e)))
        {
            Ok(p) => p,
            Err(e) => {
                report.push(Severity::Format, Some(im.id), e);
                continue;
            }
        };
        if (png.width, png.height) != (im.width, im.height) {
            report.push(
                Severity::Format,
                Some(im.id),
                format!(
                    "index says {}x{}, png is {}x{}",
                    im.width, im.height, png.width, png.height
                ),
            );
            continue;
        }
        let table: Vec<SegmentInfo> = segs
            .iter()
            .map(|s| SegmentInfo {
                id: s.id,
                category_id: s.category_id,
                is_thing: categories.get(&s.category_id).is_some_and(|c| c.is_thing),
                area: s.area,
            })
            .collect();
        for issue in consistency_issues(&png, &table) {
            report.push(Severity::Consistency, Some(im.id), issue.to_string());
        }
    }
    report
}

/// Checks a predictions file. With ground truth at hand, image ids and mask sizes are checked
/// too.
pub fn validate_predictions(path: &Path, gt: Option<&GroundTruth>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let records = match PredictionRecord::read_all(path) {
        Ok(r) => r,
        Err(e) => {
            report.push(Severity::Format, None, error_chain(&e));
            return report;
        }
    };
    let mut seen = BTreeSet::new();
    let mut missing_scores = 0usize;
    for record in &records {
        if !seen.insert(record.image) {
            report.push(Severity::Format, Some(record.image), "image listed twice");
        }
        for (k, obj) in record.objects.iter().enumerate() {
            match obj.score {
                None => missing_scores += 1,
                Some(s) if !s.is_finite() || !(0.0..=1.0).contains(&s) => report.push(
                    Severity::Format,
                    Some(record.image),
                    format!("object {k}: score {s} is not in [0, 1]"),
                ),
                Some(_) => {}
            }
            if obj.caption.trim().is_empty() {
                report.push(
                    Severity::Consistency,
                    Some(record.image),
                    format!("object {k} has an empty caption"),
                );
            }
        }
    }
    if missing_scores > 0 {
        report.push(
            Severity::Warning,
            None,
            format!("{missing_scores} objects have no score; ranking falls back to file order"),
        );
    }
    if let Some(gt) = gt {
        if let Err(e) = super::load_predictions(path, gt) {
            let severity = if e.is_consistency() {
                Severity::Consistency
            } else {
                Severity::Format
            };
            report.push(severity, None, error_chain(&e));
        }
    }
    report
}
