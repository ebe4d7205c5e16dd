use std::collections::{BTreeMap, HashMap};

use super::{BinaryMask, PanopticError, PanopticLabelMap, Result, SegmentId};

/// Sparse confusion table between ground-truth segments and predictions.
///
/// Prediction keys are segment ids when predictions come as a label map and list indices when
/// they come as independent masks. Ground-truth void never appears as a key of `counts`;
/// prediction pixels that land on ground-truth void are tallied in `pred_on_void`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntersectionTable {
    pub counts: BTreeMap<(SegmentId, u32), u64>,
    pub gt_areas: BTreeMap<SegmentId, u64>,
    pub pred_areas: BTreeMap<u32, u64>,
    pub pred_on_void: BTreeMap<u32, u64>,
}

impl IntersectionTable {
    pub fn intersection(&self, gt: SegmentId, pred: u32) -> u64 {
        self.counts.get(&(gt, pred)).copied().unwrap_or(0)
    }

    /// Plain IoU `inter / (area_gt + area_pred - inter)`.
    pub fn iou(&self, gt: SegmentId, pred: u32) -> f64 {
        let inter = self.intersection(gt, pred);
        let union = self.gt_areas.get(&gt).copied().unwrap_or(0)
            + self.pred_areas.get(&pred).copied().unwrap_or(0)
            - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

fn check(gt: (u32, u32), pred: (u32, u32)) -> Result<()> {
    if gt != pred {
        return Err(PanopticError::Shape {
            expected: gt,
            found: pred,
        });
    }
    Ok(())
}

fn gt_areas(gt: &PanopticLabelMap) -> BTreeMap<SegmentId, u64> {
    gt.segments().map(|s| (s.id, s.area)).collect()
}

/// Single pass over two label maps. Void pixels on the prediction side are ignored.
pub fn intersections_with_map(
    gt: &PanopticLabelMap,
    pred: &PanopticLabelMap,
) -> Result<IntersectionTable> {
    check(gt.dims(), pred.dims())?;
    let mut pairs: HashMap<(SegmentId, u32), u64> = HashMap::new();
    let mut on_void: HashMap<u32, u64> = HashMap::new();
    for (&g, &p) in gt.ids().iter().zip(pred.ids()) {
        if p == 0 {
            continue;
        }
        if g == 0 {
            *on_void.entry(p).or_insert(0) += 1;
        } else {
            *pairs.entry((g, p)).or_insert(0) += 1;
        }
    }
    Ok(IntersectionTable {
        counts: pairs.into_iter().collect(),
        gt_areas: gt_areas(gt),
        pred_areas: pred.segments().map(|s| (s.id, s.area)).collect(),
        pred_on_void: on_void.into_iter().collect(),
    })
}

/// Intersections of a label map with independent (possibly overlapping) masks, keyed by mask
/// index. Cost is proportional to the total number of predicted pixels.
pub fn intersections_with_masks(
    gt: &PanopticLabelMap,
    preds: &[BinaryMask],
) -> Result<IntersectionTable> {
    let mut table = IntersectionTable {
        gt_areas: gt_areas(gt),
        ..Default::default()
    };
    let ids = gt.ids();
    for (k, mask) in preds.iter().enumerate() {
        check(gt.dims(), mask.dims())?;
        let k = k as u32;
        let mut local: HashMap<SegmentId, u64> = HashMap::new();
        let mut area = 0u64;
        for i in mask.ones() {
            *local.entry(ids[i]).or_insert(0) += 1;
            area += 1;
        }
        table.pred_areas.insert(k, area);
        for (g, n) in local {
            if g == 0 {
                table.pred_on_void.insert(k, n);
            } else {
                table.counts.insert((g, k), n);
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panoptic::BinaryMask;
    use proptest::prelude::*;

    fn map(w: u32, h: u32, ids: &[u32]) -> PanopticLabelMap {
        PanopticLabelMap::from_ids(w, h, ids.to_vec(), |_| (1, true)).unwrap()
    }

    #[test]
    fn identical_single_segment() {
        let a = map(2, 2, &[7; 4]);
        let t = intersections_with_map(&a, &a).unwrap();
        assert_eq!(t.counts, BTreeMap::from([((7, 7), 4)]));
        assert_eq!(t.iou(7, 7), 1.0);
    }

    #[test]
    fn disjoint_segments() {
        let a = map(2, 2, &[7, 7, 0, 0]);
        let b = map(2, 2, &[0, 0, 3, 3]);
        let t = intersections_with_map(&a, &b).unwrap();
        assert!(t.counts.is_empty());
        assert_eq!(t.pred_on_void, BTreeMap::from([(3, 2)]));
    }

    #[test]
    fn enumerated_example() {
        let gt = map(2, 2, &[7, 7, 9, 9]);
        let pred = map(2, 2, &[1, 1, 1, 2]);
        let t = intersections_with_map(&gt, &pred).unwrap();
        assert_eq!(
            t.counts,
            BTreeMap::from([((7, 1), 2), ((9, 1), 1), ((9, 2), 1)])
        );
        // The mask form gives the same numbers under index keys.
        let masks = vec![
            BinaryMask::from_bools(2, 2, &[true, true, true, false]).unwrap(),
            BinaryMask::from_bools(2, 2, &[false, false, false, true]).unwrap(),
        ];
        let t = intersections_with_masks(&gt, &masks).unwrap();
        assert_eq!(
            t.counts,
            BTreeMap::from([((7, 0), 2), ((9, 0), 1), ((9, 1), 1)])
        );
    }

    #[test]
    fn shape_mismatch() {
        let gt = map(2, 2, &[7; 4]);
        let m = BinaryMask::new(3, 1);
        assert!(intersections_with_masks(&gt, &[m]).is_err());
    }

    fn scene() -> impl Strategy<Value = (u32, u32, Vec<u32>, Vec<Vec<bool>>)> {
        (1u32..=16, 1u32..=16).prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            (
                Just(w),
                Just(h),
                proptest::collection::vec(0u32..5, n),
                proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), 0..4),
            )
        })
    }

    proptest! {
        #[test]
        fn agrees_with_brute_force((w, h, ids, preds) in scene()) {
            let gt = map(w, h, &ids);
            let masks: Vec<_> = preds.iter().map(|b| BinaryMask::from_bools(w, h, b).unwrap()).collect();
            let t = intersections_with_masks(&gt, &masks).unwrap();
            for seg in gt.segments() {
                let gm = gt.mask_of(seg.id).unwrap();
                let mut overlap = 0;
                for (k, m) in masks.iter().enumerate() {
                    let brute = gm.intersection_area(m).unwrap();
                    prop_assert_eq!(t.intersection(seg.id, k as u32), brute);
                    overlap += brute;
                }
                let listed: u64 = t.counts.iter().filter(|((g, _), _)| *g == seg.id).map(|(_, n)| n).sum();
                prop_assert_eq!(listed, overlap);
            }
            let total: u64 = gt.segments().map(|s| s.area).sum::<u64>() + gt.void_count();
            prop_assert_eq!(total, (w * h) as u64);
        }
    }
}
