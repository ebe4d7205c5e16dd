//! A small on-disk dataset and a scripted endpoint that answers from the prompt text.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::LazyLock;

use image::{Rgb, RgbImage};
use pancap_core::annotate::{LmmClient, LmmError, LmmReply, LmmRequest};
use pancap_core::dataset::{Category, DatasetIndex, ImageRecord, SegmentRecord};
use pancap_core::panoptic::RgbIdPng;
use regex::Regex;

pub const CATEGORIES: [(u32, &str, bool); 3] =
    [(1, "person", true), (2, "dog", true), (3, "sky", false)];

/// Writes `n` images under `root/images` and `root/gt`; returns the index. Every fifth image has
/// a dog whose reply will be mislabelled by [`ScriptedLmm`].
pub fn write_dataset(root: &Path, n: usize) -> DatasetIndex {
    let (w, h) = (48u32, 32u32);
    std::fs::create_dir_all(root.join("images")).unwrap();
    std::fs::create_dir_all(root.join("gt/panoptic")).unwrap();
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
    for k in 0..n {
        let image_id = k as u64 + 1;
        let split = 10 + (k as u32 * 7) % 20;
        let ids: Vec<u32> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| {
                if y < 8 {
                    300
                } else if x < split {
                    100 + k as u32
                } else if k % 5 == 0 && x >= split + 4 {
                    200
                } else {
                    0
                }
            })
            .collect();
        let mut segs = vec![(100 + k as u32, 1u32), (300, 3)];
        if k % 5 == 0 {
            segs.push((200, 2));
        }
        for (id, cat) in segs {
            let area = ids.iter().filter(|&&v| v == id).count() as u64;
            index.segments.push(SegmentRecord {
                image: image_id,
                id,
                category_id: cat,
                area,
                caption: None,
            });
        }
        let file_name = format!("{image_id:06}.png");
        let photo = RgbImage::from_fn(w, h, |x, y| {
            Rgb([(x * 5) as u8, (y * 7) as u8, (k * 13) as u8])
        });
        photo.save(root.join("images").join(&file_name)).unwrap();
        let png = RgbIdPng::from_ids(w, h, &ids)
            .unwrap()
            .to_png_bytes()
            .unwrap();
        let panoptic_file = format!("panoptic/{image_id:06}.png");
        std::fs::write(root.join("gt").join(&panoptic_file), png).unwrap();
        index.images.push(ImageRecord {
            id: image_id,
            file_name,
            panoptic_file,
            width: w,
            height: h,
        });
    }
    std::fs::write(root.join("gt/index.json"), index.to_json()).unwrap();
    index
}

static CATEGORY_LIST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:tell you their categories|Their categories are): ([^.]*)\.").unwrap()
});

/// Replies with one well-formed entry per listed category, calling dogs "cat".
#[derive(Default)]
pub struct ScriptedLmm {
    pub calls: AtomicUsize,
}

impl LmmClient for ScriptedLmm {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let cats = &CATEGORY_LIST
            .captures(&request.prompt)
            .ok_or_else(|| LmmError::MalformedEnvelope("no category list".into()))?[1];
        let mut text = String::from("Sure.\nThe objects include:\n");
        let names: Vec<&str> = cats.split(", ").collect();
        for (i, c) in names.iter().enumerate() {
            let shown = if *c == "dog" { "cat" } else { c };
            text.push_str(&format!("{}. {shown}: a {c} seen from afar;\n", i + 1));
        }
        if names.len() > 1 {
            text.push_str("The interactions include:\n1 and 2: they share the frame;\n");
        }
        Ok(LmmReply {
            text,
            usage: Default::default(),
        })
    }
}
