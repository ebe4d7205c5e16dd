use serde::{Deserialize, Serialize};

use super::{BinaryMask, PanopticError, Result};

/// Pixel traversal order of a run-length encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RleOrder {
    /// Columns top to bottom, left to right (the COCO mask convention).
    #[default]
    ColumnMajor,
    RowMajor,
}

/// Run counts, either as a plain list or as the compact COCO string form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RleCounts {
    Runs(Vec<u32>),
    Compressed(String),
}

/// Run-length mask: alternating run counts starting with a (possibly empty) zero-run.
///
/// Serialized as `{"size": [height, width], "counts": ..., "order": "column-major"}`. A missing
/// `order` field means column-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`.
    pub size: [u32; 2],
    pub counts: RleCounts,
    #[serde(default)]
    pub order: RleOrder,
}

impl Rle {
    pub fn encode(mask: &BinaryMask, order: RleOrder) -> Self {
        let (w, h) = mask.dims();
        let mut runs = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        let mut push = |bit: bool| {
            if bit == current {
                run += 1;
            } else {
                runs.push(run);
                current = bit;
                run = 1;
            }
        };
        match order {
            RleOrder::ColumnMajor => {
                for x in 0..w {
                    for y in 0..h {
                        push(mask.get(x, y));
                    }
                }
            }
            RleOrder::RowMajor => {
                for i in 0..mask.len() {
                    push(mask.get_index(i));
                }
            }
        }
        runs.push(run);
        Rle {
            size: [h, w],
            counts: RleCounts::Runs(runs),
            order,
        }
    }

    pub fn width(&self) -> u32 {
        self.size[1]
    }

    pub fn height(&self) -> u32 {
        self.size[0]
    }

    /// Run counts, decompressing the string form when needed.
    pub fn runs(&self) -> Result<Vec<u32>> {
        match &self.counts {
            RleCounts::Runs(r) => Ok(r.clone()),
            RleCounts::Compressed(s) => decompress_counts(s),
        }
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        let (w, h) = (self.width(), self.height());
        let total = w as u64 * h as u64;
        let runs = self.runs()?;
        let sum: u64 = runs.iter().map(|&r| r as u64).sum();
        if sum != total {
            return Err(PanopticError::Rle(format!(
                "run counts sum to {sum}, expected {total} for {w}x{h}"
            )));
        }
        let mut mask = BinaryMask::new(w, h);
        let mut pos = 0u64;
        for (k, &run) in runs.iter().enumerate() {
            if k % 2 == 1 {
                for p in pos..pos + run as u64 {
                    let i = match self.order {
                        RleOrder::RowMajor => p as usize,
                        RleOrder::ColumnMajor => {
                            let (x, y) = (p / h as u64, p % h as u64);
                            (y * w as u64 + x) as usize
                        }
                    };
                    mask.set_index(i, true);
                }
            }
            pos += run as u64;
        }
        Ok(mask)
    }

    /// Converts the counts to the compact COCO string form.
    pub fn compressed(&self) -> Result<Self> {
        Ok(Rle {
            size: self.size,
            counts: RleCounts::Compressed(compress_counts(&self.runs()?)),
            order: self.order,
        })
    }
}

/// COCO compact counts: 5-bit little-endian groups with a continuation bit, offset by 48,
/// each count past the second stored as a delta against the count two positions back.
pub fn compress_counts(runs: &[u32]) -> String {
    let mut out = String::new();
    for (i, &c) in runs.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= runs[i - 2] as i64;
        }
        loop {
            let mut ch = (x & 0x1f) as u8;
            x >>= 5;
            let more = if ch & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                ch |= 0x20;
            }
            out.push((ch + 48) as char);
            if !more {
                break;
            }
        }
    }
    out
}

pub fn decompress_counts(s: &str) -> Result<Vec<u32>> {
    let bytes = s.as_bytes();
    let mut runs: Vec<u32> = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0;
        loop {
            let Some(&b) = bytes.get(p) else {
                return Err(PanopticError::Rle("truncated compressed counts".into()));
            };
            if !(48..48 + 64).contains(&b) || k > 12 {
                return Err(PanopticError::Rle(format!("invalid count byte {b:#x}")));
            }
            let c = (b - 48) as i64;
            x |= (c & 0x1f) << (5 * k);
            p += 1;
            k += 1;
            if c & 0x20 == 0 {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
        }
        let m = runs.len();
        if m > 2 {
            x += runs[m - 2] as i64;
        }
        let run = u32::try_from(x)
            .map_err(|_| PanopticError::Rle(format!("run count {x} out of range")))?;
        runs.push(run);
    }
    Ok(runs)
}
