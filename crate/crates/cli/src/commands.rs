use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};
use pancap_core::annotate::{
    hard_match, parse_response, run_annotate, AnnotateConfig, BudgetClient, CategoryComparator,
    EndpointConfig, HttpClient, LmmClient, LoggingClient, PromptTemplate, Rephraser, ReplayClient,
    RetryClient, DEFAULT_REPHRASE_PROMPT,
};
use pancap_core::dataset::{
    load_ground_truth, load_predictions, validate_dataset, validate_predictions, DatasetIndex,
    GroundTruth, ImageRecord, ValidationReport,
};
use pancap_core::eval::{
    panoptic_quality, predictions_to_map, Evaluator, ExternalScores, PqAveraging, ThresholdGrid,
};
use pancap_core::panoptic::AreaCheck;
use pancap_core::som::{render_marks, MarkOptions, MarkOverlay};
use pancap_core::stats::{corpus_report, emit_plot_data, LexiconTagger, ReportOptions};
use serde_json::json;

use crate::config::{load_rephrase, pick, ToolkitConfig};
use crate::exit::{self, Failure};
use crate::{
    AnnotateArgs, Averaging, EvalArgs, GtArgs, ParseArgs, PqArgs, SomArgs, StatsArgs, ValidateArgs,
};

pub struct Context {
    pub config: ToolkitConfig,
    pub argv: Vec<String>,
    pub started: DateTime<Utc>,
}

impl Context {
    /// Run metadata goes next to the primary output so the output itself stays reproducible.
    fn write_meta(
        &self,
        command: &str,
        out: &Path,
        extra: serde_json::Value,
    ) -> Result<(), Failure> {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        let path = out.with_file_name(name);
        let meta = json!({
            "tool": "pancap",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "argv": self.argv,
            "started": self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            "finished": Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            "details": extra,
        });
        write_text(
            &path,
            &(serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n"),
        )
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::format(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::format(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::format(format!("{}: {e}", path.display())))
}

fn required(
    flag: Option<PathBuf>,
    config: &Option<PathBuf>,
    name: &str,
) -> Result<PathBuf, Failure> {
    pick(flag, config).ok_or_else(|| Failure::usage(format!("--{name} is required")))
}

fn area_check(flag: bool, config: &ToolkitConfig) -> AreaCheck {
    if flag || config.lenient.unwrap_or(false) {
        AreaCheck::Lenient
    } else {
        AreaCheck::Strict
    }
}

fn read_index(dir: &Path, index: Option<&Path>) -> Result<DatasetIndex, Failure> {
    let path = index
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("index.json"));
    Ok(DatasetIndex::read(&path)?)
}

fn load_gt(ctx: &Context, args: &GtArgs) -> Result<GroundTruth, Failure> {
    let dir = required(args.gt.clone(), &ctx.config.paths.gt, "gt")?;
    let index = read_index(&dir, args.gt_index.as_deref())?;
    Ok(load_ground_truth(
        &dir,
        index,
        area_check(args.lenient, &ctx.config),
    )?)
}

fn averaging(flag: Option<Averaging>, config: &Option<String>) -> Result<PqAveraging, Failure> {
    if let Some(a) = flag {
        return Ok(match a {
            Averaging::Pooled => PqAveraging::Pooled,
            Averaging::PerCategory => PqAveraging::PerCategory,
        });
    }
    match config.as_deref() {
        None | Some("pooled") => Ok(PqAveraging::Pooled),
        Some("per-category") | Some("per_category") => Ok(PqAveraging::PerCategory),
        Some(other) => Err(Failure::usage(format!("unknown pq_averaging {other:?}"))),
    }
}

/// JSON to `out` (or stdout) plus the metadata sidecar.
fn emit(ctx: &Context, command: &str, out: Option<&Path>, body: &str) -> Result<bool, Failure> {
    match out {
        Some(path) => {
            write_text(path, body)?;
            ctx.write_meta(command, path, json!({}))?;
            Ok(true)
        }
        None => {
            print!("{body}");
            Ok(false)
        }
    }
}

pub fn eval(ctx: &Context, a: EvalArgs) -> Result<(), Failure> {
    let c = &ctx.config;
    if a.grid != "default" {
        return Err(Failure::usage(format!(
            "unknown grid {:?}; only \"default\" is named",
            a.grid
        )));
    }
    let defaults = ThresholdGrid::default();
    let grid = ThresholdGrid {
        iou_thresholds: pick(a.iou_thresholds, &c.eval.iou_thresholds)
            .unwrap_or(defaults.iou_thresholds),
        meteor_thresholds: pick(a.meteor_thresholds, &c.eval.meteor_thresholds)
            .unwrap_or(defaults.meteor_thresholds),
    };
    grid.validate()?;
    let mut evaluator = Evaluator {
        grid,
        k: pick(a.k, &c.eval.k).unwrap_or(0.5),
        pq_averaging: averaging(a.pq_averaging, &c.eval.pq_averaging)?,
        ..Default::default()
    };
    if let Some(spec) = &a.external_scores {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| Failure::usage("--external-scores expects name=path"))?;
        evaluator.external = Some(ExternalScores::parse_csv(
            name,
            &read_text(Path::new(path))?,
        )?);
    }
    let gt = load_gt(ctx, &a.gt)?;
    let pred_path = required(a.pred, &c.paths.pred, "pred")?;
    let preds = load_predictions(&pred_path, &gt)?;
    let report = evaluator.evaluate(&gt, &preds)?;
    for note in &report.notes {
        log::warn!("{note}");
    }
    let out = pick(a.out, &c.paths.out);
    let to_file = emit(ctx, "eval", out.as_deref(), &report.to_json())?;
    if a.table {
        if to_file {
            print!("{}", report.table());
        } else {
            eprint!("{}", report.table());
        }
    }
    Ok(())
}

pub fn pq(ctx: &Context, a: PqArgs) -> Result<(), Failure> {
    let c = &ctx.config;
    let averaging = averaging(a.averaging, &c.eval.pq_averaging)?;
    let gt = load_gt(ctx, &a.gt)?;
    let pred_path = required(a.pred, &c.paths.pred, "pred")?;
    let preds = load_predictions(&pred_path, &gt)?;
    let is_thing: BTreeMap<u32, bool> = gt
        .index
        .categories
        .iter()
        .map(|c| (c.id, c.is_thing))
        .collect();
    let empty = Vec::new();
    let maps = gt
        .images
        .iter()
        .map(|im| {
            let (w, h) = im.map.dims();
            predictions_to_map(w, h, preds.get(&im.image_id).unwrap_or(&empty), &is_thing)
                .map_err(|e| Failure::from(e).context(format!("image {}", im.image_id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<_> = gt
        .images
        .iter()
        .zip(&maps)
        .map(|(im, m)| (&im.map, m))
        .collect();
    let result = panoptic_quality(&pairs, averaging)?;
    let body = serde_json::to_string_pretty(&result).expect("pq serializes") + "\n";
    emit(ctx, "pq", pick(a.out, &c.paths.out).as_deref(), &body)?;
    Ok(())
}

pub fn stats(ctx: &Context, a: StatsArgs) -> Result<(), Failure> {
    let c = &ctx.config;
    let dir = required(a.dataset, &c.paths.gt, "dataset")?;
    let out = required(a.out, &c.paths.out, "out")?;
    let index = read_index(&dir, a.index.as_deref())?;
    let tagger = match pick(a.tagger, &c.stats.tagger) {
        Some(p) => LexiconTagger::with_overrides(&read_text(&p)?)?,
        None => LexiconTagger::default(),
    };
    let defaults = ReportOptions::default();
    let opts = ReportOptions {
        bin_width: pick(a.bin_width, &c.stats.bin_width).unwrap_or(defaults.bin_width),
        top_k: pick(a.top_k, &c.stats.top_k).unwrap_or(defaults.top_k),
    };
    if !(opts.bin_width > 0.0) {
        return Err(Failure::usage("--bin-width must be positive"));
    }
    let report = corpus_report(&index, &tagger, &opts)?;
    emit_plot_data(&report, &out)?;
    write_text(&out.join("report.json"), &report.to_json())?;
    ctx.write_meta("stats", &out, json!({}))
}

fn find_image<'a>(
    index: &'a DatasetIndex,
    png: &Path,
    id: Option<u64>,
) -> Result<&'a ImageRecord, Failure> {
    let found = match id {
        Some(id) => index.images.iter().find(|im| im.id == id),
        None => {
            let name = png.file_name();
            index
                .images
                .iter()
                .find(|im| Path::new(&im.panoptic_file).file_name() == name)
        }
    };
    found.ok_or_else(|| {
        Failure::new(
            exit::CONSISTENCY,
            anyhow::anyhow!("{} is not listed in the index", png.display()),
        )
    })
}

pub fn som_render(ctx: &Context, a: SomArgs) -> Result<(), Failure> {
    let index = DatasetIndex::read(&a.index)?;
    let im = find_image(&index, &a.panoptic, a.image_id)?;
    let record = ImageRecord {
        panoptic_file: a.panoptic.to_string_lossy().into_owned(),
        ..im.clone()
    };
    let by_image = index.segments_by_image();
    let segs = by_image.get(&im.id).map(Vec::as_slice).unwrap_or(&[]);
    let gt = pancap_core::dataset::load_gt_image(
        Path::new(""),
        &record,
        segs,
        &index.category_map(),
        area_check(false, &ctx.config),
    )?;
    let photo = image::open(&a.image)
        .map_err(|e| Failure::format(format!("{}: {e}", a.image.display())))?
        .to_rgb8();
    let opts = MarkOptions {
        palette_offset: a.palette_offset,
        scale: a.scale,
        ..Default::default()
    };
    let (marked, overlay) = render_marks(&photo, &gt.map, &opts)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::format(format!("{}: {e}", parent.display())))?;
    }
    marked
        .save_with_format(&a.out, image::ImageFormat::Png)
        .map_err(|e| Failure::format(format!("{}: {e}", a.out.display())))?;
    write_text(&a.overlay, &overlay.to_json())?;
    ctx.write_meta(
        "som-render",
        &a.out,
        json!({ "marks": overlay.marks.len() }),
    )
}

pub fn annotate(ctx: &Context, a: AnnotateArgs) -> Result<(), Failure> {
    let c = &ctx.config.annotate;
    let index = read_index(&a.panoptic, a.index.as_deref())?;
    let mut config = AnnotateConfig::new(&a.images, &a.panoptic);
    if let Some(dir) = pick(a.templates, &c.templates) {
        config.templates = PromptTemplate::load_dir(&dir)?;
    }
    config.seed = pick(a.seed, &ctx.config.seed).unwrap_or(0);
    config.jobs = pick(a.concurrency, &c.concurrency).unwrap_or(4).max(1);
    config.area_check = area_check(a.lenient, &ctx.config);
    if let Some(p) = pick(a.synonyms, &c.synonyms) {
        config.comparator = CategoryComparator::parse(&read_text(&p)?);
    }
    let endpoint: EndpointConfig = match &a.endpoint {
        Some(p) => crate::config::read_toml(p)?,
        None => c.endpoint.clone().unwrap_or_default(),
    };
    config.model = endpoint.model.clone();
    let max_retries = pick(a.max_retries, &c.max_retries).unwrap_or(5);
    let budget = pick(a.budget, &c.budget);

    std::fs::create_dir_all(&a.out)
        .map_err(|e| Failure::format(format!("{}: {e}", a.out.display())))?;
    let log_path = a.out.join("requests.jsonl");
    let inner: Arc<dyn LmmClient> = match &a.replay {
        Some(cassette) => Arc::new(ReplayClient::open(cassette)?),
        None => {
            let http = HttpClient::new(endpoint);
            let limited: Arc<dyn LmmClient> = match budget {
                Some(n) => Arc::new(BudgetClient::new(http, n)),
                None => Arc::new(http),
            };
            Arc::new(RetryClient::new(limited).with_max_retries(max_retries))
        }
    };
    let client = LoggingClient::open(inner, &log_path)?;

    let rephrase_cfg = match &a.rephrase_endpoint {
        Some(p) => Some(load_rephrase(p)?),
        None => c.rephrase.clone(),
    };
    // In replay mode rephrase replies come from the same cassette, so a run stays offline.
    let rephrase_client = match (&rephrase_cfg, &a.replay) {
        (None, _) => None,
        (Some(_), Some(cassette)) => {
            Some(Box::new(ReplayClient::open(cassette)?) as Box<dyn LmmClient>)
        }
        (Some(r), None) => Some(Box::new(
            RetryClient::new(HttpClient::new(r.endpoint.clone())).with_max_retries(max_retries),
        ) as Box<dyn LmmClient>),
    };
    let rephrase_log = match rephrase_client {
        Some(inner) => Some(LoggingClient::open(
            inner,
            &a.out.join("rephrase_requests.jsonl"),
        )?),
        None => None,
    };
    if let (Some(r), Some(log)) = (&rephrase_cfg, &rephrase_log) {
        config.rephrase = Some(Rephraser {
            client: log,
            model: r.endpoint.model.clone(),
            prompt: r
                .prompt
                .clone()
                .unwrap_or_else(|| DEFAULT_REPHRASE_PROMPT.to_string()),
        });
    }

    let summary = run_annotate(&index, &config, &client, &a.out)?;
    log::info!(
        "{} images: {} accepted, {} rejected, {} pending; {} requests sent",
        summary.images,
        summary.accepted,
        summary.rejected,
        summary.pending,
        client.forwarded()
    );
    ctx.write_meta(
        "annotate",
        &a.out,
        json!({ "summary": summary, "requests_sent": client.forwarded() }),
    )?;
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    if summary.pending > 0 {
        return Err(Failure::new(
            exit::ENDPOINT,
            anyhow::anyhow!(
                "{} images pending after endpoint errors (see pending.jsonl); rerun to resume",
                summary.pending
            ),
        ));
    }
    Ok(())
}

pub fn parse(_ctx: &Context, a: ParseArgs) -> Result<(), Failure> {
    let raw = match a.input.as_deref() {
        None => None,
        Some(p) if p == Path::new("-") => None,
        Some(p) => Some(read_text(p)?),
    };
    let raw = match raw {
        Some(r) => r,
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::format(format!("stdin: {e}")))?;
            s
        }
    };
    let parsed = parse_response(&raw).map_err(|e| Failure::new(exit::FORMAT, e))?;
    let mut out = json!({ "parsed": parsed });
    if let (Some(ov), Some(ix)) = (&a.overlay, &a.index) {
        let overlay: MarkOverlay = serde_json::from_str(&read_text(ov)?)
            .map_err(|e| Failure::format(format!("{}: {e}", ov.display())))?;
        let index = DatasetIndex::read(ix)?;
        let names = index.category_map();
        let expected = overlay
            .marks
            .iter()
            .map(|m| {
                names
                    .get(&m.category_id)
                    .map(|c| (m.display_id, c.name.clone()))
                    .ok_or_else(|| {
                        Failure::new(
                            exit::CONSISTENCY,
                            anyhow::anyhow!("unknown category {}", m.category_id),
                        )
                    })
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        let comparator = match &a.synonyms {
            Some(p) => CategoryComparator::parse(&read_text(p)?),
            None => CategoryComparator::default(),
        };
        out["verdict"] = json!(hard_match(&parsed, &expected, &comparator));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("parse output serializes")
    );
    Ok(())
}

pub fn validate(ctx: &Context, a: ValidateArgs) -> Result<(), Failure> {
    let mut report = ValidationReport::default();
    let mut any = false;
    if let Some(dir) = pick(a.dataset, &ctx.config.paths.gt) {
        any = true;
        let index = read_index(&dir, a.index.as_deref())?;
        report
            .violations
            .extend(validate_dataset(&dir, &index).violations);
    }
    if let Some(pred) = a.pred {
        any = true;
        let gt = match &a.gt {
            Some(dir) => Some(load_ground_truth(
                dir,
                read_index(dir, None)?,
                AreaCheck::Lenient,
            )?),
            None => None,
        };
        report
            .violations
            .extend(validate_predictions(&pred, gt.as_ref()).violations);
    }
    if !any {
        return Err(Failure::usage("give --dataset and/or --pred"));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    match exit::severity_code(report.worst()) {
        0 => Ok(()),
        code => Err(Failure::new(
            code,
            anyhow::anyhow!(
                "{} violation(s)",
                report
                    .violations
                    .iter()
                    .filter(|v| v.severity != pancap_core::dataset::Severity::Warning)
                    .count()
            ),
        )),
    }
}
