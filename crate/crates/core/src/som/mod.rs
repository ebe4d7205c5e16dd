//! Set-of-Mark overlays: unfilled segment boundaries plus a numeric id at each segment's
//! interior anchor, with metadata mapping display ids back to segment ids.

mod anchor;
mod boundary;
mod font;

pub use anchor::{anchor_point, distance_to_complement};
pub use boundary::{rasterize, trace_boundary, Polyline};
pub use font::render_number;

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::panoptic::{PanopticError, PanopticLabelMap, SegmentId};

#[derive(Debug, thiserror::Error)]
pub enum SomError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("image is {image:?} but the label map is {map:?}")]
    Shape { image: (u32, u32), map: (u32, u32) },
    #[error(transparent)]
    Panoptic(#[from] PanopticError),
}

pub type Result<T> = std::result::Result<T, SomError>;

/// Bright hues, cycled by display id.
pub const PALETTE: [[u8; 3]; 12] = [
    [255, 59, 48],
    [52, 199, 89],
    [0, 122, 255],
    [255, 204, 0],
    [175, 82, 222],
    [90, 200, 250],
    [255, 149, 0],
    [255, 45, 85],
    [0, 255, 255],
    [191, 255, 0],
    [255, 0, 255],
    [255, 255, 255],
];

const OUTLINE: [u8; 3] = [0, 0, 0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub display_id: u32,
    pub segment_id: SegmentId,
    pub category_id: u32,
    /// `[x, y]`.
    pub anchor: [u32; 2],
    pub color: [u8; 3],
    pub boundaries: Vec<Polyline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkOverlay {
    pub width: u32,
    pub height: u32,
    pub marks: Vec<Mark>,
}

impl MarkOverlay {
    pub fn segment_of(&self, display_id: u32) -> Option<SegmentId> {
        self.marks
            .iter()
            .find(|m| m.display_id == display_id)
            .map(|m| m.segment_id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("overlay serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkOptions {
    /// Rotates the palette so different runs can use different colors deterministically.
    pub palette_offset: usize,
    /// Glyph pixel size; `None` scales with the shorter image side.
    pub scale: Option<u32>,
    /// Minimum contrast ratio between a label color and the pixels under it.
    pub min_contrast: f64,
}

impl Default for MarkOptions {
    fn default() -> Self {
        MarkOptions {
            palette_offset: 0,
            scale: None,
            min_contrast: 3.0,
        }
    }
}

fn luminance(c: [u8; 3]) -> f64 {
    let lin = |v: u8| {
        let s = v as f64 / 255.0;
        if s <= 0.04045 {
            s / 12.92
        } else {
            ((s + 0.055) / 1.055).powf(2.4)
        }
    };
    0.2126 * lin(c[0]) + 0.7152 * lin(c[1]) + 0.0722 * lin(c[2])
}

pub fn contrast_ratio(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    (hi + 0.05) / (lo + 0.05)
}

fn label_origin(anchor: [u32; 2], tw: u32, th: u32, w: u32, h: u32) -> (i64, i64) {
    let clamp = |v: i64, size: u32, extent: u32| {
        let max = extent as i64 - size as i64 - 1;
        if max < 1 {
            v.min(extent as i64 - size as i64).max(0)
        } else {
            v.clamp(1, max)
        }
    };
    (
        clamp(anchor[0] as i64 - tw as i64 / 2, tw, w),
        clamp(anchor[1] as i64 - th as i64 / 2, th, h),
    )
}

fn pick_color(
    image: &RgbImage,
    display_id: u32,
    origin: (i64, i64),
    tw: u32,
    th: u32,
    opts: &MarkOptions,
) -> [u8; 3] {
    let (w, h) = image.dimensions();
    let mut sum = 0.0;
    let mut n = 0u32;
    for y in origin.1.max(0)..(origin.1 + th as i64).min(h as i64) {
        for x in origin.0.max(0)..(origin.0 + tw as i64).min(w as i64) {
            sum += luminance(image.get_pixel(x as u32, y as u32).0);
            n += 1;
        }
    }
    let background = if n == 0 { 0.0 } else { sum / n as f64 };
    let base = (display_id as usize - 1 + opts.palette_offset) % PALETTE.len();
    let mut best = PALETTE[base];
    let mut best_ratio = f64::MIN;
    for k in 0..PALETTE.len() {
        let c = PALETTE[(base + k) % PALETTE.len()];
        let r = contrast_ratio(luminance(c), background);
        if r >= opts.min_contrast {
            return c;
        }
        if r > best_ratio {
            best_ratio = r;
            best = c;
        }
    }
    best
}

fn put(image: &mut RgbImage, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < image.width() && (y as u32) < image.height() {
        image.put_pixel(x as u32, y as u32, Rgb(c));
    }
}

/// Draws every segment's boundary and display id onto a copy of `image`.
///
/// Display ids `1..=N` follow ascending segment id. Segments are traced in parallel; drawing
/// order is fixed, so output is deterministic.
pub fn render_marks(
    image: &RgbImage,
    map: &PanopticLabelMap,
    opts: &MarkOptions,
) -> Result<(RgbImage, MarkOverlay)> {
    if image.dimensions() != map.dims() {
        return Err(SomError::Shape {
            image: image.dimensions(),
            map: map.dims(),
        });
    }
    let (w, h) = map.dims();
    let segments: Vec<_> = map.segments().cloned().collect();
    let masks = map.all_masks();
    let traced = segments
        .par_iter()
        .map(|s| {
            let mask = &masks[&s.id];
            Ok((trace_boundary(mask)?, anchor_point(mask)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = opts.scale.unwrap_or((w.min(h) / 160).max(1));
    let mut out = image.clone();
    let mut marks = Vec::with_capacity(segments.len());
    for (k, (seg, (boundaries, anchor))) in segments.iter().zip(traced).enumerate() {
        let display_id = k as u32 + 1;
        let (tw, th, _) = render_number(display_id, scale);
        let origin = label_origin(anchor, tw, th, w, h);
        let color = pick_color(image, display_id, origin, tw, th, opts);
        marks.push(Mark {
            display_id,
            segment_id: seg.id,
            category_id: seg.category_id,
            anchor,
            color,
            boundaries,
        });
    }
    for m in &marks {
        for poly in &m.boundaries {
            for [x, y] in rasterize(poly) {
                put(&mut out, x as i64, y as i64, m.color);
            }
        }
    }
    for m in &marks {
        let (tw, th, bits) = render_number(m.display_id, scale);
        let (ox, oy) = label_origin(m.anchor, tw, th, w, h);
        let on = |x: i64, y: i64| {
            x >= 0 && y >= 0 && x < tw as i64 && y < th as i64 && bits[(y * tw as i64 + x) as usize]
        };
        for y in -1..=th as i64 {
            for x in -1..=tw as i64 {
                if on(x, y) {
                    put(&mut out, ox + x, oy + y, m.color);
                } else if (-1..=1).any(|dy| (-1..=1).any(|dx| on(x + dx, y + dy))) {
                    put(&mut out, ox + x, oy + y, OUTLINE);
                }
            }
        }
    }
    Ok((
        out,
        MarkOverlay {
            width: w,
            height: h,
            marks,
        },
    ))
}
