use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_file, DatasetError, Result};
use crate::panoptic::{load_panoptic, AreaCheck, PanopticLabelMap, RgbIdPng, SegmentInfo};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: u64,
    /// Photograph, relative to the image directory.
    pub file_name: String,
    /// Id-encoded PNG, relative to the ground-truth directory.
    pub panoptic_file: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: String,
    pub is_thing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub image: u64,
    pub id: u32,
    pub category_id: u32,
    pub area: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

/// The JSON index of a ground-truth directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub images: Vec<ImageRecord>,
    pub categories: Vec<Category>,
    pub segments: Vec<SegmentRecord>,
}

#[derive(Deserialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct CocoCategory {
    id: u32,
    name: String,
    #[serde(default)]
    isthing: u8,
}

#[derive(Deserialize)]
struct CocoSegment {
    id: u32,
    category_id: u32,
    area: u64,
    #[serde(default)]
    caption: Option<String>,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    image_id: u64,
    file_name: String,
    segments_info: Vec<CocoSegment>,
}

#[derive(Deserialize)]
struct CocoPanoptic {
    images: Vec<CocoImage>,
    categories: Vec<CocoCategory>,
    annotations: Vec<CocoAnnotation>,
}

impl From<CocoPanoptic> for DatasetIndex {
    fn from(coco: CocoPanoptic) -> Self {
        let panoptic_files: BTreeMap<u64, String> = coco
            .annotations
            .iter()
            .map(|a| (a.image_id, a.file_name.clone()))
            .collect();
        let images = coco
            .images
            .into_iter()
            .map(|im| ImageRecord {
                panoptic_file: panoptic_files.get(&im.id).cloned().unwrap_or_else(|| {
                    Path::new(&im.file_name)
                        .with_extension("png")
                        .to_string_lossy()
                        .into_owned()
                }),
                id: im.id,
                file_name: im.file_name,
                width: im.width,
                height: im.height,
            })
            .collect();
        let categories = coco
            .categories
            .into_iter()
            .map(|c| Category {
                id: c.id,
                name: c.name,
                is_thing: c.isthing == 1,
            })
            .collect();
        let segments = coco
            .annotations
            .into_iter()
            .flat_map(|a| {
                let image = a.image_id;
                a.segments_info.into_iter().map(move |s| SegmentRecord {
                    image,
                    id: s.id,
                    category_id: s.category_id,
                    area: s.area,
                    caption: s.caption,
                })
            })
            .collect();
        DatasetIndex {
            images,
            categories,
            segments,
        }
    }
}

impl DatasetIndex {
    /// Parses either the native index or COCO panoptic JSON.
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let value: Value = serde_json::from_str(text)?;
        if value.get("annotations").is_some() {
            Ok(serde_json::from_value::<CocoPanoptic>(value)?.into())
        } else {
            serde_json::from_value(value)
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| DatasetError::Format(format!("{} is not UTF-8", path.display())))?;
        Self::from_json(&text).map_err(|source| DatasetError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Pretty JSON with a trailing newline; field order is fixed so output is reproducible.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("index serializes");
        s.push('\n');
        s
    }

    pub fn category_map(&self) -> BTreeMap<u32, &Category> {
        self.categories.iter().map(|c| (c.id, c)).collect()
    }

    /// Segments grouped by image id, in file order.
    pub fn segments_by_image(&self) -> BTreeMap<u64, Vec<&SegmentRecord>> {
        let mut out: BTreeMap<u64, Vec<&SegmentRecord>> = BTreeMap::new();
        for s in &self.segments {
            out.entry(s.image).or_default().push(s);
        }
        out
    }

    /// Non-empty captions in file order.
    pub fn captions(&self) -> impl Iterator<Item = &str> {
        self.segments
            .iter()
            .filter_map(|s| s.caption.as_deref())
            .filter(|c| !c.trim().is_empty())
    }

    /// Schema-level checks that need no pixel data.
    pub(crate) fn structural_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut image_ids = BTreeSet::new();
        for im in &self.images {
            if !image_ids.insert(im.id) {
                errors.push(format!("duplicate image id {}", im.id));
            }
            if im.width == 0 || im.height == 0 {
                errors.push(format!("image {} has zero size", im.id));
            }
        }
        let categories = self.category_map();
        if categories.len() != self.categories.len() {
            errors.push("duplicate category id".to_string());
        }
        for s in &self.segments {
            if !image_ids.contains(&s.image) {
                errors.push(format!(
                    "segment {} refers to unknown image {}",
                    s.id, s.image
                ));
            }
            if !categories.contains_key(&s.category_id) {
                errors.push(format!(
                    "segment {} of image {} has unknown category {}",
                    s.id, s.image, s.category_id
                ));
            }
        }
        errors
    }
}

/// One decoded ground-truth image.
#[derive(Debug, Clone)]
pub struct GtImage {
    pub image_id: u64,
    pub map: PanopticLabelMap,
    pub captions: BTreeMap<u32, String>,
}

/// A decoded ground-truth split.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub index: DatasetIndex,
    pub images: Vec<GtImage>,
}

impl GroundTruth {
    pub fn categories(&self) -> BTreeMap<u32, &Category> {
        self.index.category_map()
    }
}

/// Loads an index and decodes every id map under `dir`. Images are returned in index order;
/// decoding runs in parallel.
pub fn load_ground_truth(dir: &Path, index: DatasetIndex, check: AreaCheck) -> Result<GroundTruth> {
    use rayon::prelude::*;

    if let Some(e) = index.structural_errors().into_iter().next() {
        return Err(DatasetError::Format(e));
    }
    let categories = index.category_map();
    let by_image = index.segments_by_image();
    let images = index
        .images
        .par_iter()
        .map(|im| {
            let segs = by_image.get(&im.id).map(Vec::as_slice).unwrap_or(&[]);
            load_gt_image(dir, im, segs, &categories, check)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth { index, images })
}

/// Decodes one image's id map and attaches its captions.
pub fn load_gt_image(
    dir: &Path,
    im: &ImageRecord,
    segs: &[&SegmentRecord],
    categories: &BTreeMap<u32, &Category>,
    check: AreaCheck,
) -> Result<GtImage> {
    let table: Vec<SegmentInfo> = segs
        .iter()
        .map(|s| SegmentInfo {
            id: s.id,
            category_id: s.category_id,
            is_thing: categories[&s.category_id].is_thing,
            area: s.area,
        })
        .collect();
    let path = dir.join(&im.panoptic_file);
    let png =
        RgbIdPng::from_png_bytes(&read_file(&path)?).map_err(|source| DatasetError::Panoptic {
            image: im.id,
            source,
        })?;
    if (png.width, png.height) != (im.width, im.height) {
        return Err(DatasetError::Format(format!(
            "image {}: index says {}x{}, {} is {}x{}",
            im.id,
            im.width,
            im.height,
            path.display(),
            png.width,
            png.height
        )));
    }
    let map = load_panoptic(&png, &table, check).map_err(|source| DatasetError::Panoptic {
        image: im.id,
        source,
    })?;
    let captions = segs
        .iter()
        .filter(|s| map.segment(s.id).is_some())
        .map(|s| (s.id, s.caption.clone().unwrap_or_default()))
        .collect();
    Ok(GtImage {
        image_id: im.id,
        map,
        captions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coco_panoptic_adapter() {
        let text = r#"{
            "images": [{"id": 5, "file_name": "a.jpg", "width": 2, "height": 1}],
            "annotations": [{"image_id": 5, "file_name": "a.png",
                "segments_info": [{"id": 7, "category_id": 1, "area": 2, "iscrowd": 0, "caption": "x"}]}],
            "categories": [{"id": 1, "name": "person", "isthing": 1, "supercategory": "person"}]
        }"#;
        let idx = DatasetIndex::from_json(text).unwrap();
        assert_eq!(idx.images[0].panoptic_file, "a.png");
        assert!(idx.categories[0].is_thing);
        assert_eq!(idx.segments[0].caption.as_deref(), Some("x"));
        assert!(idx.structural_errors().is_empty());
    }

    #[test]
    fn native_roundtrip() {
        let idx = DatasetIndex {
            images: vec![ImageRecord {
                id: 1,
                file_name: "1.jpg".into(),
                panoptic_file: "1.png".into(),
                width: 2,
                height: 2,
            }],
            categories: vec![Category {
                id: 3,
                name: "sky".into(),
                is_thing: false,
            }],
            segments: vec![SegmentRecord {
                image: 1,
                id: 9,
                category_id: 3,
                area: 4,
                caption: None,
            }],
        };
        assert_eq!(DatasetIndex::from_json(&idx.to_json()).unwrap(), idx);
    }

    #[test]
    fn unknown_category_is_structural_error() {
        let idx = DatasetIndex {
            images: vec![],
            categories: vec![],
            segments: vec![SegmentRecord {
                image: 1,
                id: 9,
                category_id: 3,
                area: 4,
                caption: None,
            }],
        };
        assert_eq!(idx.structural_errors().len(), 2);
    }
}
