//! Brute-force oracles and synthetic scenes shared by integration tests.
#![allow(dead_code)]

pub mod annotate;

use std::collections::BTreeMap;

use pancap_core::dataset::{
    Category, DatasetIndex, GroundTruth, GtImage, ImageRecord, SegmentRecord,
};
use pancap_core::eval::Prediction;
use pancap_core::metrics::{tokenize, Meteor};
use pancap_core::panoptic::{BinaryMask, PanopticLabelMap};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct ScenePred {
    pub mask: Vec<bool>,
    pub caption: String,
    pub score: f64,
    pub category_id: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub width: u32,
    pub height: u32,
    /// Row-major segment ids, 0 for void.
    pub gt_ids: Vec<u32>,
    pub gt_captions: BTreeMap<u32, String>,
    /// Category of each gt id; defaults to category 1 (a thing).
    pub gt_categories: BTreeMap<u32, u32>,
    pub preds: Vec<ScenePred>,
}

impl Scene {
    pub fn gt_mask(&self, id: u32) -> Vec<bool> {
        self.gt_ids.iter().map(|&v| v == id).collect()
    }

    pub fn gt_segment_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.gt_ids.iter().copied().filter(|&v| v != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

pub const CATEGORIES: [(u32, &str, bool); 3] =
    [(1, "person", true), (2, "dog", true), (3, "sky", false)];

/// Converts scenes (image ids `1..=n`) into library inputs.
pub fn to_inputs(scenes: &[Scene]) -> (GroundTruth, BTreeMap<u64, Vec<Prediction>>) {
    let mut index = DatasetIndex {
        categories: CATEGORIES
            .iter()
            .map(|&(id, name, is_thing)| Category {
                id,
                name: name.into(),
                is_thing,
            })
            .collect(),
        ..Default::default()
    };
    let mut images = Vec::new();
    let mut preds = BTreeMap::new();
    for (i, s) in scenes.iter().enumerate() {
        let image_id = i as u64 + 1;
        index.images.push(ImageRecord {
            id: image_id,
            file_name: format!("{image_id}.jpg"),
            panoptic_file: format!("{image_id}.png"),
            width: s.width,
            height: s.height,
        });
        let cat = |id: u32| s.gt_categories.get(&id).copied().unwrap_or(1);
        let map = PanopticLabelMap::from_ids(s.width, s.height, s.gt_ids.clone(), |id| {
            let c = cat(id);
            (c, CATEGORIES.iter().find(|x| x.0 == c).unwrap().2)
        })
        .unwrap();
        for seg in map.segments() {
            index.segments.push(SegmentRecord {
                image: image_id,
                id: seg.id,
                category_id: seg.category_id,
                area: seg.area,
                caption: s.gt_captions.get(&seg.id).cloned(),
            });
        }
        let captions = map
            .segments()
            .map(|seg| {
                (
                    seg.id,
                    s.gt_captions.get(&seg.id).cloned().unwrap_or_default(),
                )
            })
            .collect();
        images.push(GtImage {
            image_id,
            map,
            captions,
        });
        preds.insert(
            image_id,
            s.preds
                .iter()
                .map(|p| Prediction {
                    mask: BinaryMask::from_bools(s.width, s.height, &p.mask).unwrap(),
                    caption: p.caption.clone(),
                    score: Some(p.score),
                    category_id: p.category_id,
                })
                .collect(),
        );
    }
    (GroundTruth { index, images }, preds)
}

/// Ground truth fed back as predictions, score 1 and category attached.
pub fn identity_scene(mut s: Scene) -> Scene {
    s.preds = s
        .gt_segment_ids()
        .into_iter()
        .map(|id| ScenePred {
            mask: s.gt_mask(id),
            caption: s.gt_captions.get(&id).cloned().unwrap_or_default(),
            score: 1.0,
            category_id: Some(s.gt_categories.get(&id).copied().unwrap_or(1)),
        })
        .collect();
    s
}

fn bool_iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCell {
    /// `(image index, prediction index, matched gt)` in rank order.
    pub ranked: Vec<(usize, usize, Option<u32>)>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Naive greedy matcher over plain boolean rasters; shares nothing with the library except
/// the METEOR scorer.
pub fn oracle_cell(scenes: &[Scene], iou_t: f64, meteor_t: Option<f64>) -> OracleCell {
    let meteor = Meteor::default();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (i, s) in scenes.iter().enumerate() {
        for k in 0..s.preds.len() {
            order.push((i, k));
        }
    }
    // Insertion sort with an explicit key: score desc, area desc, input position asc.
    let key = |&(i, k): &(usize, usize)| {
        let p = &scenes[i].preds[k];
        (p.score, p.mask.iter().filter(|&&b| b).count())
    };
    let mut ranked: Vec<(usize, usize)> = Vec::new();
    for item in order {
        let (s, a) = key(&item);
        let pos = ranked
            .iter()
            .position(|other| {
                let (so, ao) = key(other);
                s > so || (s == so && a > ao)
            })
            .unwrap_or(ranked.len());
        ranked.insert(pos, item);
    }
    let mut used: Vec<Vec<u32>> = vec![Vec::new(); scenes.len()];
    let mut out = Vec::new();
    let mut tp = 0;
    for (i, k) in ranked {
        let s = &scenes[i];
        let p = &s.preds[k];
        let mut best: Option<(f64, u32)> = None;
        for g in s.gt_segment_ids() {
            if used[i].contains(&g) {
                continue;
            }
            let iou = bool_iou(&p.mask, &s.gt_mask(g));
            if iou == 0.0 || iou < iou_t {
                continue;
            }
            if let Some(m) = meteor_t {
                let cap = s.gt_captions.get(&g).cloned().unwrap_or_default();
                if meteor.score(&tokenize(&p.caption), &[tokenize(&cap)]) < m {
                    continue;
                }
            }
            if best.is_none_or(|(b, bg)| iou > b || (iou == b && g < bg)) {
                best = Some((iou, g));
            }
        }
        if let Some((_, g)) = best {
            used[i].push(g);
            tp += 1;
        }
        out.push((i, k, best.map(|b| b.1)));
    }
    let num_gt: usize = scenes.iter().map(|s| s.gt_segment_ids().len()).sum();
    OracleCell {
        fp: out.len() - tp,
        fn_: num_gt - tp,
        ranked: out,
        tp,
    }
}

/// AP by walking every point of the PR curve: for each recall level j/num_gt take the highest
/// precision reached at any cut-off whose recall is at least that level.
pub fn oracle_ap(labels: &[bool], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut best = vec![0.0f64; num_gt + 1];
    for cut in 1..=labels.len() {
        let tp = labels[..cut].iter().filter(|&&b| b).count();
        let precision = tp as f64 / cut as f64;
        for level in 1..=tp {
            best[level] = best[level].max(precision);
        }
    }
    Some(best[1..].iter().sum::<f64>() / num_gt as f64)
}

const WORDS: [&str; 10] = [
    "a", "man", "dog", "red", "running", "on", "the", "grass", "small", "ball",
];

fn caption(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(2..6);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn rect(w: u32, h: u32, rng: &mut impl Rng) -> Vec<bool> {
    let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
    let (x1, y1) = (rng.gen_range(x0..w) + 1, rng.gen_range(y0..h) + 1);
    (0..h)
        .flat_map(|y| (0..w).map(move |x| x >= x0 && x < x1 && y >= y0 && y < y1))
        .collect()
}

/// At most 16×16 pixels, 3 gt segments and 3 predictions. Predictions are jittered copies of gt
/// masks or random rectangles; captions come from a ten-word vocabulary so METEOR spreads out.
pub fn random_scene(rng: &mut impl Rng) -> Scene {
    let (w, h) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
    let n = (w * h) as usize;
    let mut gt_ids = vec![0u32; n];
    let n_gt = rng.gen_range(0..=3);
    let ids: Vec<u32> = (0..n_gt).map(|k| 10 + k as u32 * 7).collect();
    for &id in &ids {
        for (px, on) in rect(w, h, rng).into_iter().enumerate() {
            if on {
                gt_ids[px] = id;
            }
        }
    }
    let present: Vec<u32> = {
        let mut v: Vec<u32> = gt_ids.iter().copied().filter(|&x| x != 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let gt_captions: BTreeMap<u32, String> = present.iter().map(|&id| (id, caption(rng))).collect();
    let n_pred = rng.gen_range(0..=3);
    let mut preds = Vec::new();
    for _ in 0..n_pred {
        let mask: Vec<bool> = if !present.is_empty() && rng.gen_bool(0.7) {
            let id = *present.choose(rng).unwrap();
            gt_ids
                .iter()
                .map(|&v| {
                    if rng.gen_bool(0.15) {
                        !(v == id)
                    } else {
                        v == id
                    }
                })
                .collect()
        } else {
            rect(w, h, rng)
        };
        if !mask.iter().any(|&b| b) {
            continue;
        }
        let cap = match gt_captions.values().collect::<Vec<_>>().choose(rng) {
            Some(c) if rng.gen_bool(0.5) => (*c).clone(),
            _ => caption(rng),
        };
        preds.push(ScenePred {
            mask,
            caption: cap,
            // Coarse scores so ties exercise the tie-break key.
            score: rng.gen_range(0..5) as f64 / 4.0,
            category_id: None,
        });
    }
    Scene {
        width: w,
        height: h,
        gt_ids,
        gt_captions,
        gt_categories: BTreeMap::new(),
        preds,
    }
}
