use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, DatasetError, GroundTruth, Result};
use crate::eval::Prediction;
use crate::panoptic::{BinaryMask, RgbIdPng, Rle};

/// Where a predicted mask comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaskRef {
    Rle(Rle),
    Png {
        png: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub mask: MaskRef,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image: u64,
    pub objects: Vec<ObjectRecord>,
}

impl PredictionRecord {
    pub fn read_all(path: &Path) -> Result<Vec<PredictionRecord>> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes).map_err(|source| DatasetError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn decode_mask(
    mask: &MaskRef,
    base: &Path,
    cache: &mut HashMap<String, RgbIdPng>,
    image: u64,
) -> Result<BinaryMask> {
    match mask {
        MaskRef::Rle(rle) => rle
            .decode()
            .map_err(|source| DatasetError::Panoptic { image, source }),
        MaskRef::Png { png, id } => {
            if !cache.contains_key(png) {
                let decoded = RgbIdPng::from_png_bytes(&read_file(&base.join(png))?)
                    .map_err(|source| DatasetError::Panoptic { image, source })?;
                cache.insert(png.clone(), decoded);
            }
            let decoded = &cache[png];
            let ids = decoded.ids();
            Ok(BinaryMask::from_fn(
                decoded.width,
                decoded.height,
                |x, y| {
                    let v = ids[(y * decoded.width + x) as usize];
                    match id {
                        Some(id) => v == *id,
                        None => v != 0,
                    }
                },
            ))
        }
    }
}

/// Reads a predictions file and decodes every mask against the ground-truth image sizes.
///
/// Images without a record get no predictions. Relative PNG paths resolve against the
/// directory of `path`.
pub fn load_predictions(path: &Path, gt: &GroundTruth) -> Result<BTreeMap<u64, Vec<Prediction>>> {
    let records = PredictionRecord::read_all(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let sizes: BTreeMap<u64, (u32, u32)> = gt
        .index
        .images
        .iter()
        .map(|im| (im.id, (im.width, im.height)))
        .collect();
    let mut out: BTreeMap<u64, Vec<Prediction>> = BTreeMap::new();
    for record in records {
        let Some(&dims) = sizes.get(&record.image) else {
            return Err(DatasetError::Consistency {
                image: record.image,
                message: "predictions refer to an image missing from the ground truth".into(),
            });
        };
        if out.contains_key(&record.image) {
            return Err(DatasetError::Format(format!(
                "image {} appears twice in {}",
                record.image,
                path.display()
            )));
        }
        let mut cache = HashMap::new();
        let mut preds = Vec::with_capacity(record.objects.len());
        for (k, obj) in record.objects.into_iter().enumerate() {
            if let Some(s) = obj.score {
                if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                    return Err(DatasetError::Format(format!(
                        "image {} object {k}: score {s} is not in [0, 1]",
                        record.image
                    )));
                }
            }
            let mask = decode_mask(&obj.mask, base, &mut cache, record.image)?;
            if mask.dims() != dims {
                return Err(DatasetError::Format(format!(
                    "image {} object {k}: mask is {}x{}, image is {}x{}",
                    record.image,
                    mask.width(),
                    mask.height(),
                    dims.0,
                    dims.1
                )));
            }
            preds.push(Prediction {
                mask,
                caption: obj.caption,
                score: obj.score,
                category_id: obj.category_id,
            });
        }
        out.insert(record.image, preds);
    }
    Ok(out)
}
