use super::{PanopticError, Result};

/// Per-pixel set membership, bit-packed row-major into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("area", &self.area())
            .finish()
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        let len = width as usize * height as usize;
        Self {
            width,
            height,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut mask = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }

    /// Builds a mask from row-major membership flags.
    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(PanopticError::Image(format!(
                "{} flags for a {width}x{height} mask",
                bits.len()
            )));
        }
        let mut mask = Self::new(width, height);
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            mask.words[i / 64] |= 1 << (i % 64);
        }
        Ok(mask)
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

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.get_index(self.index(x, y))
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, value: bool) {
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let i = self.index(x, y);
        self.set_index(i, value);
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Number of set pixels.
    pub fn area(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Row-major indices of set pixels in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    fn check_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(PanopticError::Shape {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<u64> {
        self.check_shape(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    pub fn union_area(&self, other: &BinaryMask) -> Result<u64> {
        self.check_shape(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as u64)
            .sum())
    }

    /// Row-major membership flags.
    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get_index(i)).collect()
    }
}

/// Intersection over union. Two empty masks have IoU 0.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.check_shape(b)?;
    let (mut inter, mut union) = (0u64, 0u64);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones() as u64;
        union += (x | y).count_ones() as u64;
    }
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iou_examples() {
        let full = BinaryMask::from_fn(4, 4, |_, _| true);
        assert_eq!(iou(&full, &full).unwrap(), 1.0);

        let left = BinaryMask::from_fn(4, 4, |x, _| x < 2);
        let right = BinaryMask::from_fn(4, 4, |x, _| x >= 2);
        assert_eq!(iou(&left, &right).unwrap(), 0.0);

        let top_row = BinaryMask::from_fn(2, 2, |_, y| y == 0);
        let left_col = BinaryMask::from_fn(2, 2, |x, _| x == 0);
        assert_eq!(iou(&top_row, &left_col).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn iou_of_empty_masks_is_zero() {
        let e = BinaryMask::new(3, 3);
        assert_eq!(iou(&e, &e).unwrap(), 0.0);
    }

    #[test]
    fn iou_shape_mismatch() {
        let a = BinaryMask::new(2, 3);
        let b = BinaryMask::new(3, 2);
        assert!(matches!(iou(&a, &b), Err(PanopticError::Shape { .. })));
    }

    #[test]
    fn ones_iterates_across_word_boundaries() {
        let m = BinaryMask::from_fn(100, 2, |x, y| (x + y) % 37 == 0);
        let expected: Vec<usize> = (0..200)
            .filter(|&i| (i % 100 + i / 100) % 37 == 0)
            .collect();
        assert_eq!(m.ones().collect::<Vec<_>>(), expected);
        assert_eq!(m.area(), expected.len() as u64);
    }

    fn mask_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        (1u32..20, 1u32..20).prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(a, b)| {
                    (
                        BinaryMask::from_bools(w, h, &a).unwrap(),
                        BinaryMask::from_bools(w, h, &b).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded((a, b) in mask_pair()) {
            let ab = iou(&a, &b).unwrap();
            prop_assert_eq!(ab, iou(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            if !a.is_empty() {
                prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
            }
            let brute_inter = a.to_bools().iter().zip(b.to_bools()).filter(|(x, y)| **x && *y).count();
            prop_assert_eq!(a.intersection_area(&b).unwrap(), brute_inter as u64);
        }
    }
}
