use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_prompt, hard_match, parse_response, select_template, AnnotateError, CategoryComparator,
    EntryIssue, FilterViolation, LmmClient, LmmError, LmmRequest, ParsedResponse, PromptTemplate,
    Result,
};
use crate::dataset::{load_gt_image, DatasetIndex, ImageRecord, SegmentRecord};
use crate::panoptic::{AreaCheck, SegmentId};
use crate::som::{render_marks, MarkOptions, MarkOverlay};

/// Placeholder rewriting instruction; `<caption>` is replaced by the concatenated caption.
pub const DEFAULT_REPHRASE_PROMPT: &str =
    "Rewrite the following description of one object as a single fluent caption. \
Keep every fact and do not add new ones. Reply with the caption only.\n\n<caption>";

/// Optional text-only endpoint that merges a segment's clauses into one caption.
pub struct Rephraser<'a> {
    pub client: &'a dyn LmmClient,
    pub model: String,
    pub prompt: String,
}

impl Rephraser<'_> {
    fn rephrase(&self, text: &str) -> std::result::Result<String, LmmError> {
        let req = LmmRequest {
            model: self.model.clone(),
            prompt: self.prompt.replace("<caption>", text),
            image_png: None,
        };
        let out = self.client.complete(&req)?.text.trim().to_string();
        if out.is_empty() {
            return Err(LmmError::MalformedEnvelope("empty rephrase".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionedSegment {
    pub display_id: u32,
    pub segment_id: SegmentId,
    pub caption: String,
    pub rephrased: bool,
}

fn with_period(s: &str) -> String {
    let s = s.trim();
    if s.ends_with(['.', '!', '?']) {
        s.to_string()
    } else {
        format!("{s}.")
    }
}

/// Builds one caption per mark: the description, then every interaction naming that display id.
pub fn assemble_captions(
    parsed: &ParsedResponse,
    overlay: &MarkOverlay,
    rephrase: Option<&Rephraser>,
) -> Vec<CaptionedSegment> {
    let mut out = Vec::new();
    for mark in &overlay.marks {
        let Some(obj) = parsed.objects.iter().find(|o| o.id == mark.display_id) else {
            continue;
        };
        let mut caption = with_period(&obj.description);
        for i in &parsed.interactions {
            if i.ids.0 == mark.display_id || i.ids.1 == mark.display_id {
                caption.push(' ');
                caption.push_str(&with_period(&i.text));
            }
        }
        let (caption, rephrased) = match rephrase {
            None => (caption, false),
            Some(r) => match r.rephrase(&caption) {
                Ok(t) => (t, true),
                Err(e) => {
                    log::warn!(
                        "rephrase failed for segment {}: {e}; keeping concatenation",
                        mark.segment_id
                    );
                    (caption, false)
                }
            },
        };
        out.push(CaptionedSegment {
            display_id: mark.display_id,
            segment_id: mark.segment_id,
            caption,
            rephrased,
        });
    }
    out
}

pub struct AnnotateConfig<'a> {
    /// Directory holding the photographs named by `ImageRecord::file_name`.
    pub images_dir: PathBuf,
    /// Ground-truth directory holding the id PNGs named by `ImageRecord::panoptic_file`.
    pub panoptic_dir: PathBuf,
    pub templates: Vec<PromptTemplate>,
    pub seed: u64,
    pub model: String,
    pub comparator: CategoryComparator,
    pub marks: MarkOptions,
    pub jobs: usize,
    pub rephrase: Option<Rephraser<'a>>,
    pub area_check: AreaCheck,
}

impl AnnotateConfig<'_> {
    pub fn new(images_dir: impl Into<PathBuf>, panoptic_dir: impl Into<PathBuf>) -> Self {
        AnnotateConfig {
            images_dir: images_dir.into(),
            panoptic_dir: panoptic_dir.into(),
            templates: PromptTemplate::bundled(),
            seed: 0,
            model: super::EndpointConfig::default().model,
            comparator: CategoryComparator::default(),
            marks: MarkOptions::default(),
            jobs: 4,
            rephrase: None,
            area_check: AreaCheck::Strict,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotateSummary {
    pub images: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Images whose endpoint call failed; rerunning retries only these.
    pub pending: usize,
    pub segments: usize,
}

#[derive(Serialize)]
struct RejectRecord<'a> {
    image: u64,
    template: &'a str,
    violations: Vec<FilterViolation>,
    issues: &'a [EntryIssue],
}

#[derive(Serialize)]
struct PendingRecord<'a> {
    image: u64,
    code: &'a str,
    message: String,
}

enum Outcome {
    Accepted(Vec<CaptionedSegment>),
    Rejected {
        template: String,
        violations: Vec<FilterViolation>,
        issues: Vec<EntryIssue>,
    },
    Pending(LmmError),
}

fn encode_png(img: &image::RgbImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| AnnotateError::Io(format!("encoding marked image: {e}")))?;
    Ok(buf.into_inner())
}

fn annotate_image(
    im: &ImageRecord,
    segs: &[&SegmentRecord],
    names: &BTreeMap<u32, &crate::dataset::Category>,
    config: &AnnotateConfig,
    client: &dyn LmmClient,
) -> Result<Outcome> {
    let gt = load_gt_image(&config.panoptic_dir, im, segs, names, config.area_check)?;
    let photo_path = config.images_dir.join(&im.file_name);
    let photo = image::open(&photo_path)
        .map_err(|e| AnnotateError::Image {
            image: im.id,
            message: format!("{}: {e}", photo_path.display()),
        })?
        .to_rgb8();
    let (marked, overlay) = render_marks(&photo, &gt.map, &config.marks)?;
    if overlay.marks.is_empty() {
        return Ok(Outcome::Accepted(Vec::new()));
    }
    let expected: BTreeMap<u32, String> = overlay
        .marks
        .iter()
        .map(|m| (m.display_id, names[&m.category_id].name.clone()))
        .collect();
    let categories: Vec<String> = expected.values().cloned().collect();
    let template = select_template(&config.templates, &im.file_name, config.seed)?;
    let prompt = build_prompt(template, categories.len(), &categories)?;
    let request = LmmRequest {
        model: config.model.clone(),
        prompt,
        image_png: Some(encode_png(&marked)?),
    };
    let reply = match client.complete(&request) {
        Ok(r) => r,
        Err(e) => return Ok(Outcome::Pending(e)),
    };
    let rejected = |violations, issues| Outcome::Rejected {
        template: template.id.clone(),
        violations,
        issues,
    };
    let parsed = match parse_response(&reply.text) {
        Ok(p) => p,
        Err(_) => {
            let missing = expected
                .keys()
                .map(|&id| FilterViolation::MissingId { id })
                .collect();
            return Ok(rejected(missing, Vec::new()));
        }
    };
    let verdict = hard_match(&parsed, &expected, &config.comparator);
    if !verdict.accepted {
        return Ok(rejected(verdict.violations, parsed.issues));
    }
    Ok(Outcome::Accepted(assemble_captions(
        &parsed,
        &overlay,
        config.rephrase.as_ref(),
    )))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| AnnotateError::Io(format!("{}: {e}", path.display())))
}

/// Annotates every image of `index` and writes a captioned dataset to `out`:
/// `index.json`, copied id PNGs, `rejects.jsonl` and `pending.jsonl`.
///
/// Images are processed on a pool of `config.jobs` threads; output order follows the index, so
/// a replayed run is byte-identical. Wrap `client` in a [`super::LoggingClient`] to make reruns
/// skip requests that already succeeded.
pub fn run_annotate(
    index: &DatasetIndex,
    config: &AnnotateConfig,
    client: &dyn LmmClient,
    out: &Path,
) -> Result<AnnotateSummary> {
    if let Some(e) = index.structural_errors().into_iter().next() {
        return Err(AnnotateError::Dataset(
            crate::dataset::DatasetError::Format(e),
        ));
    }
    let names = index.category_map();
    let by_image = index.segments_by_image();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| AnnotateError::Config(e.to_string()))?;
    let outcomes = pool.install(|| {
        index
            .images
            .par_iter()
            .map(|im| {
                let segs = by_image.get(&im.id).map(Vec::as_slice).unwrap_or(&[]);
                annotate_image(im, segs, &names, config, client)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    std::fs::create_dir_all(out)
        .map_err(|e| AnnotateError::Io(format!("{}: {e}", out.display())))?;
    let mut result = DatasetIndex {
        categories: index.categories.clone(),
        ..Default::default()
    };
    let mut rejects = String::new();
    let mut pending = String::new();
    let mut summary = AnnotateSummary {
        images: index.images.len(),
        ..Default::default()
    };
    for (im, outcome) in index.images.iter().zip(&outcomes) {
        match outcome {
            Outcome::Accepted(captions) => {
                summary.accepted += 1;
                summary.segments += captions.len();
                let by_seg: BTreeMap<SegmentId, &str> = captions
                    .iter()
                    .map(|c| (c.segment_id, c.caption.as_str()))
                    .collect();
                for s in by_image.get(&im.id).into_iter().flatten() {
                    let mut s = (*s).clone();
                    s.caption = by_seg.get(&s.id).map(|c| c.to_string());
                    result.segments.push(s);
                }
                result.images.push(im.clone());
                let src = config.panoptic_dir.join(&im.panoptic_file);
                let dst = out.join(&im.panoptic_file);
                if let Some(parent) = dst.parent() {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| AnnotateError::Io(format!("{}: {e}", parent.display())))?;
                }
                std::fs::copy(&src, &dst).map_err(|e| {
                    AnnotateError::Io(format!("{} -> {}: {e}", src.display(), dst.display()))
                })?;
            }
            Outcome::Rejected {
                template,
                violations,
                issues,
            } => {
                summary.rejected += 1;
                let rec = RejectRecord {
                    image: im.id,
                    template,
                    violations: violations.clone(),
                    issues,
                };
                rejects.push_str(&serde_json::to_string(&rec).expect("reject serializes"));
                rejects.push('\n');
            }
            Outcome::Pending(e) => {
                summary.pending += 1;
                log::warn!("image {}: {e}", im.id);
                let rec = PendingRecord {
                    image: im.id,
                    code: e.code(),
                    message: e.to_string(),
                };
                pending.push_str(&serde_json::to_string(&rec).expect("pending serializes"));
                pending.push('\n');
            }
        }
    }
    write(&out.join("index.json"), result.to_json().as_bytes())?;
    write(&out.join("rejects.jsonl"), rejects.as_bytes())?;
    write(&out.join("pending.jsonl"), pending.as_bytes())?;
    Ok(summary)
}
