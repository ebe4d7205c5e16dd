use image::{Rgb, RgbImage};
use pancap_core::panoptic::PanopticLabelMap;
use pancap_core::som::{render_marks, MarkOptions};
use sha2::{Digest, Sha256};

const PIXELS_SHA256: &str = "d610c15a791a98158338f707b59f60d017cfc6102a9df0b1a2815dfe21f3ecb3";
const OVERLAY_SHA256: &str = "b328f5c0a5e9572476aa5b12c21a968b593576745f086f8a83671223665f774f";

fn scene() -> (RgbImage, PanopticLabelMap) {
    let (w, h) = (96u32, 64u32);
    let img = RgbImage::from_fn(w, h, |x, y| {
        Rgb([(x * 2) as u8, (y * 3) as u8, ((x + y) % 256) as u8])
    });
    let ids: Vec<u32> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let (dx, dy) = (x as i32 - 30, y as i32 - 30);
            if dx * dx + dy * dy < 400 {
                1_000
            } else if x >= 60 && (y < 20 || x >= 80) {
                77
            } else if y >= 54 {
                5
            } else {
                0
            }
        })
        .collect();
    let map = PanopticLabelMap::from_ids(w, h, ids, |id| (id % 7 + 1, id != 5)).unwrap();
    (img, map)
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[test]
fn rendering_is_pinned() {
    let (img, map) = scene();
    let (out, overlay) = render_marks(&img, &map, &MarkOptions::default()).unwrap();
    let again = render_marks(&img, &map, &MarkOptions::default()).unwrap();
    assert_eq!(out, again.0);
    assert_eq!(overlay, again.1);
    assert_eq!(hex(out.as_raw()), PIXELS_SHA256);
    assert_eq!(hex(overlay.to_json().as_bytes()), OVERLAY_SHA256);
}
