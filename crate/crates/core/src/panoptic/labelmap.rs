use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BinaryMask, PanopticError, Result, RgbIdPng, SegmentId};

/// One row of the segment table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub id: SegmentId,
    pub category_id: u32,
    pub is_thing: bool,
    pub area: u64,
}

/// How declared areas are reconciled with raster counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AreaCheck {
    /// Any disagreement is a consistency error.
    #[default]
    Strict,
    /// Disagreements are logged and the counted area wins.
    Lenient,
}

/// A disagreement between an id raster and its segment table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConsistencyIssue {
    /// A raster id has no segment record.
    OrphanSegmentId {
        id: SegmentId,
        pixels: u64,
    },
    AreaMismatch {
        id: SegmentId,
        declared: u64,
        counted: u64,
    },
    DuplicateSegment {
        id: SegmentId,
    },
    /// Id 0 is reserved for void.
    VoidSegment,
}

impl ConsistencyIssue {
    /// Area disagreements are the only issues lenient loading tolerates.
    pub fn is_area_only(&self) -> bool {
        matches!(self, ConsistencyIssue::AreaMismatch { .. })
    }
}

impl fmt::Display for ConsistencyIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsistencyIssue::OrphanSegmentId { id, pixels } => {
                write!(f, "orphan segment id {id} ({pixels} pixels)")
            }
            ConsistencyIssue::AreaMismatch {
                id,
                declared,
                counted,
            } => write!(
                f,
                "segment {id} declares area {declared} but covers {counted} pixels"
            ),
            ConsistencyIssue::DuplicateSegment { id } => write!(f, "duplicate segment id {id}"),
            ConsistencyIssue::VoidSegment => write!(f, "segment table contains id 0"),
        }
    }
}

/// Per-pixel segment ids plus the segment table they index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanopticLabelMap {
    width: u32,
    height: u32,
    ids: Vec<SegmentId>,
    segments: BTreeMap<SegmentId, SegmentInfo>,
}

fn count_ids(ids: &[SegmentId]) -> HashMap<SegmentId, u64> {
    let mut counts = HashMap::new();
    for &id in ids {
        *counts.entry(id).or_insert(0u64) += 1;
    }
    counts
}

/// Lists every disagreement between a raster and a segment table, sorted for stable output.
pub fn consistency_issues(png: &RgbIdPng, segments: &[SegmentInfo]) -> Vec<ConsistencyIssue> {
    issues_for_ids(&png.ids(), segments)
}

fn issues_for_ids(ids: &[SegmentId], segments: &[SegmentInfo]) -> Vec<ConsistencyIssue> {
    let counts = count_ids(ids);
    let mut issues = Vec::new();
    let mut seen = BTreeMap::new();
    for seg in segments {
        if seg.id == 0 {
            issues.push(ConsistencyIssue::VoidSegment);
            continue;
        }
        if seen.insert(seg.id, ()).is_some() {
            issues.push(ConsistencyIssue::DuplicateSegment { id: seg.id });
            continue;
        }
        let counted = counts.get(&seg.id).copied().unwrap_or(0);
        if counted != seg.area {
            issues.push(ConsistencyIssue::AreaMismatch {
                id: seg.id,
                declared: seg.area,
                counted,
            });
        }
    }
    let mut orphans: Vec<_> = counts
        .iter()
        .filter(|(&id, _)| id != 0 && !seen.contains_key(&id))
        .map(|(&id, &pixels)| ConsistencyIssue::OrphanSegmentId { id, pixels })
        .collect();
    orphans.sort_by_key(|i| match i {
        ConsistencyIssue::OrphanSegmentId { id, .. } => *id,
        _ => 0,
    });
    issues.extend(orphans);
    issues
}

/// Decodes an id raster and reconciles it with its segment table.
///
/// Orphan raster ids, duplicate records and records for id 0 are always errors. Area
/// disagreements are errors under [`AreaCheck::Strict`]; under [`AreaCheck::Lenient`] they are
/// logged, the counted area replaces the declared one, and records covering no pixels are dropped.
pub fn load_panoptic(
    png: &RgbIdPng,
    segments: &[SegmentInfo],
    check: AreaCheck,
) -> Result<PanopticLabelMap> {
    let ids = png.ids();
    let issues = issues_for_ids(&ids, segments);
    for issue in issues {
        if issue.is_area_only() && check == AreaCheck::Lenient {
            log::warn!("{issue}");
        } else {
            return Err(PanopticError::Consistency(issue));
        }
    }
    let counts = count_ids(&ids);
    let segments = segments
        .iter()
        .filter_map(|s| {
            let area = counts.get(&s.id).copied().unwrap_or(0);
            (area > 0).then(|| (s.id, SegmentInfo { area, ..s.clone() }))
        })
        .collect();
    Ok(PanopticLabelMap {
        width: png.width,
        height: png.height,
        ids,
        segments,
    })
}

impl PanopticLabelMap {
    /// Builds a map from raw ids, deriving areas; `category` supplies `(category_id, is_thing)`
    /// for each nonzero id.
    pub fn from_ids(
        width: u32,
        height: u32,
        ids: Vec<SegmentId>,
        mut category: impl FnMut(SegmentId) -> (u32, bool),
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(PanopticError::Dimensions(width, height));
        }
        if ids.len() != width as usize * height as usize {
            return Err(PanopticError::Image(format!(
                "{} ids for a {width}x{height} map",
                ids.len()
            )));
        }
        let mut segments = BTreeMap::new();
        for (id, area) in count_ids(&ids) {
            if id == 0 {
                continue;
            }
            let (category_id, is_thing) = category(id);
            segments.insert(
                id,
                SegmentInfo {
                    id,
                    category_id,
                    is_thing,
                    area,
                },
            );
        }
        Ok(Self {
            width,
            height,
            ids,
            segments,
        })
    }

    /// Rasterizes disjoint masks into a label map. Masks are given as `(info, mask)`; the area in
    /// `info` is replaced by the mask area. Any pixel claimed twice is an overlap error.
    pub fn from_masks(
        width: u32,
        height: u32,
        parts: &[(SegmentInfo, BinaryMask)],
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(PanopticError::Dimensions(width, height));
        }
        let mut ids = vec![0; width as usize * height as usize];
        let mut segments = BTreeMap::new();
        for (info, mask) in parts {
            if mask.dims() != (width, height) {
                return Err(PanopticError::Shape {
                    expected: (width, height),
                    found: mask.dims(),
                });
            }
            if info.id == 0 {
                return Err(PanopticError::Consistency(ConsistencyIssue::VoidSegment));
            }
            if segments.contains_key(&info.id) {
                return Err(PanopticError::Consistency(
                    ConsistencyIssue::DuplicateSegment { id: info.id },
                ));
            }
            for i in mask.ones() {
                if ids[i] != 0 {
                    return Err(PanopticError::Overlap {
                        x: (i % width as usize) as u32,
                        y: (i / width as usize) as u32,
                    });
                }
                ids[i] = info.id;
            }
            let area = mask.area();
            if area > 0 {
                segments.insert(
                    info.id,
                    SegmentInfo {
                        area,
                        ..info.clone()
                    },
                );
            }
        }
        Ok(Self {
            width,
            height,
            ids,
            segments,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Row-major segment ids.
    pub fn ids(&self) -> &[SegmentId] {
        &self.ids
    }

    pub fn id_at(&self, x: u32, y: u32) -> SegmentId {
        self.ids[y as usize * self.width as usize + x as usize]
    }

    pub fn segments(&self) -> impl Iterator<Item = &SegmentInfo> {
        self.segments.values()
    }

    pub fn segment(&self, id: SegmentId) -> Option<&SegmentInfo> {
        self.segments.get(&id)
    }

    pub fn void_count(&self) -> u64 {
        self.ids.iter().filter(|&&id| id == 0).count() as u64
    }

    /// Binary mask of one segment.
    pub fn mask_of(&self, id: SegmentId) -> Result<BinaryMask> {
        if id == 0 || !self.segments.contains_key(&id) {
            return Err(PanopticError::NotFound(id));
        }
        let mut mask = BinaryMask::new(self.width, self.height);
        for (i, _) in self.ids.iter().enumerate().filter(|(_, &v)| v == id) {
            mask.set_index(i, true);
        }
        Ok(mask)
    }

    /// Masks of all segments in one pass, keyed by segment id.
    pub fn all_masks(&self) -> BTreeMap<SegmentId, BinaryMask> {
        let mut masks: BTreeMap<SegmentId, BinaryMask> = self
            .segments
            .keys()
            .map(|&id| (id, BinaryMask::new(self.width, self.height)))
            .collect();
        for (i, id) in self.ids.iter().enumerate() {
            if let Some(m) = masks.get_mut(id) {
                m.set_index(i, true);
            }
        }
        masks
    }

    pub fn to_png(&self) -> Result<RgbIdPng> {
        RgbIdPng::from_ids(self.width, self.height, &self.ids)
    }
}
