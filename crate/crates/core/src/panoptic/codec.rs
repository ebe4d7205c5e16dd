use std::io::Cursor;
use std::path::Path;

use image::{ColorType, ImageFormat, RgbImage};

use super::{PanopticError, Result, SegmentId};

/// Largest id representable in a 24-bit RGB pixel.
pub const MAX_SEGMENT_ID: SegmentId = (1 << 24) - 1;

/// Decodes one RGB pixel into a segment id.
#[inline]
pub fn decode_id(r: u8, g: u8, b: u8) -> SegmentId {
    r as u32 + 256 * g as u32 + 65536 * b as u32
}

/// Encodes a segment id as an `(R, G, B)` triple.
pub fn encode_id(id: u64) -> Result<(u8, u8, u8)> {
    if id > MAX_SEGMENT_ID as u64 {
        return Err(PanopticError::IdOutOfRange(id));
    }
    Ok((
        (id & 0xff) as u8,
        ((id >> 8) & 0xff) as u8,
        ((id >> 16) & 0xff) as u8,
    ))
}

/// An 8-bit RGB raster holding encoded segment ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbIdPng {
    pub width: u32,
    pub height: u32,
    /// Row-major `(R, G, B)` triples.
    pub pixels: Vec<[u8; 3]>,
}

impl RgbIdPng {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(PanopticError::Dimensions(width, height));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(PanopticError::Image(format!(
                "{} pixels for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds the raster from decoded ids.
    pub fn from_ids(width: u32, height: u32, ids: &[SegmentId]) -> Result<Self> {
        let pixels = ids
            .iter()
            .map(|&id| encode_id(id as u64).map(|(r, g, b)| [r, g, b]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, pixels)
    }

    pub fn ids(&self) -> Vec<SegmentId> {
        self.pixels
            .iter()
            .map(|&[r, g, b]| decode_id(r, g, b))
            .collect()
    }

    /// Decodes PNG bytes. Only 8-bit RGB and RGBA inputs are accepted; alpha is ignored.
    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| PanopticError::Image(e.to_string()))?;
        let rgb = match img.color() {
            ColorType::Rgb8 | ColorType::Rgba8 => img.to_rgb8(),
            other => {
                return Err(PanopticError::Image(format!(
                    "id maps must be 8-bit RGB, found {other:?}"
                )))
            }
        };
        let (width, height) = rgb.dimensions();
        let pixels = rgb.pixels().map(|p| p.0).collect();
        Self::new(width, height, pixels)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_png_bytes(&bytes)
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let img = RgbImage::from_raw(self.width, self.height, flat)
            .ok_or_else(|| PanopticError::Image("raster size mismatch".into()))?;
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| PanopticError::Image(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_png_bytes()?)?;
        Ok(())
    }
}
