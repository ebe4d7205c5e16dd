//! Acceptance criteria 1 to 10, one PASS/FAIL line each. Criterion 9 needs the released
//! dataset and reports SKIPPED unless `PANCAP_DATASET` names its directory or index file.
//! Built without the test harness so the report prints whether or not it passes.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;
use std::time::{Duration, Instant};

use common::annotate::{write_dataset, ScriptedLmm};
use common::{identity_scene, oracle_ap, oracle_cell, random_scene, to_inputs, Scene};
use pancap_core::annotate::{
    parse_response, run_annotate, AnnotateConfig, BudgetClient, Interaction, LoggingClient,
    ObjectEntry, ReplayClient,
};
use pancap_core::dataset::DatasetIndex;
use pancap_core::eval::{
    average_precision, dense_map, match_cell, panoptic_quality, EvalImage, Evaluator, PqAveraging,
    PqResult, Prepared, ThresholdGrid,
};
use pancap_core::metrics::{
    bleu4, build_df, corpus_bleu4, rouge_l, tokenize, CiderD, Meteor, Tokenizer,
};
use pancap_core::panoptic::{decode_id, encode_id, PanopticLabelMap, RgbIdPng, MAX_SEGMENT_ID};
use pancap_core::stats::{corpus_report, LexiconTagger, ReportOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

enum Verdict {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn prepare(
    gt: &pancap_core::dataset::GroundTruth,
    preds: &BTreeMap<u64, Vec<pancap_core::eval::Prediction>>,
) -> Prepared {
    let images: Vec<EvalImage<'_>> = gt
        .images
        .iter()
        .map(|im| EvalImage {
            image_id: im.image_id,
            gt: &im.map,
            captions: &im.captions,
            preds: &preds[&im.image_id],
        })
        .collect();
    Prepared::new(&images, &Meteor::default(), &Tokenizer::default(), 0.3).unwrap()
}

const WORDS: [&str; 16] = [
    "a", "large", "brown", "dog", "runs", "across", "the", "green", "field", "near", "old",
    "wooden", "fence", "under", "cloudy", "sky",
];

/// A 64×48 image tiled by 3 to 8 rectangles of mixed categories, each with a long caption.
fn fixture_scene(rng: &mut impl Rng) -> Scene {
    let (w, h) = (64u32, 48u32);
    let cols = rng.gen_range(1..=4u32);
    let rows = rng.gen_range(2..=2u32);
    let mut gt_ids = vec![0u32; (w * h) as usize];
    let mut gt_captions = BTreeMap::new();
    let mut gt_categories = BTreeMap::new();
    let mut next = rng.gen_range(1..1000u32);
    for r in 0..rows {
        for c in 0..cols {
            next += rng.gen_range(1..50);
            let id = next;
            let (x0, x1) = (c * w / cols, (c + 1) * w / cols);
            let (y0, y1) = (r * h / rows, (r + 1) * h / rows);
            for y in y0..y1 {
                for x in x0..x1 {
                    gt_ids[(y * w + x) as usize] = id;
                }
            }
            let len = rng.gen_range(6..14);
            let text: Vec<&str> = (0..len)
                .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
                .collect();
            gt_captions.insert(id, text.join(" "));
            gt_categories.insert(id, rng.gen_range(1..=3));
        }
    }
    Scene {
        width: w,
        height: h,
        gt_ids,
        gt_captions,
        gt_categories,
        preds: vec![],
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let scenes: Vec<Scene> = (0..50)
        .map(|_| identity_scene(fixture_scene(&mut rng)))
        .collect();
    let (gt, preds) = to_inputs(&scenes);
    let start = Instant::now();
    let report = Evaluator::default()
        .evaluate(&gt, &preds)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let m = &report.m_at_k;
    check(report.map == Some(1.0), || format!("mAP {:?}", report.map))?;
    check(m.factor == Some(1.0), || {
        format!("m@0.5IoU factor {:?}", m.factor)
    })?;
    for key in ["bleu4", "rouge_l"] {
        let v = m.metrics.get(key).and_then(|x| x.value);
        check(v == Some(1.0), || format!("{key}@0.5IoU {v:?}"))?;
    }
    let pq = report.pq.as_ref().and_then(|p| p.pq);
    check(pq == Some(100.0), || format!("PQ {pq:?}"))?;
    check(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} images, {} segments: mAP 1, factor 1, BLEU@4 1, ROUGE-L 1, PQ 100 in {:.2?}",
        report.num_images, report.num_gt, elapsed
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = ThresholdGrid::default();
    let mut cells = 0usize;
    let mut worst = 0.0f64;
    for n in 0..500 {
        let scene = random_scene(&mut rng);
        let scenes = [scene];
        let (gt, preds) = to_inputs(&scenes);
        let prepared = prepare(&gt, &preds);
        for (iou_t, m) in grid.cells() {
            let cell = match_cell(&prepared, iou_t, Some(m));
            let o = oracle_cell(&scenes, iou_t, Some(m));
            check((cell.tp, cell.fp, cell.fn_) == (o.tp, o.fp, o.fn_), || {
                format!(
                    "scene {n} cell ({iou_t}, {m}): {:?} vs oracle {:?}",
                    (cell.tp, cell.fp, cell.fn_),
                    (o.tp, o.fp, o.fn_)
                )
            })?;
            let ranked: Vec<_> = cell
                .entries
                .iter()
                .map(|e| (e.image_id as usize - 1, e.prediction, e.gt))
                .collect();
            check(ranked == o.ranked, || {
                format!("scene {n} cell ({iou_t}, {m}): assignment differs")
            })?;
            let labels: Vec<bool> = o.ranked.iter().map(|r| r.2.is_some()).collect();
            match (average_precision(&cell), oracle_ap(&labels, o.tp + o.fn_)) {
                (Some(a), Some(b)) => {
                    worst = worst.max((a - b).abs());
                    check((a - b).abs() <= 1e-9, || {
                        format!("scene {n} cell ({iou_t}, {m}): AP {a} vs {b}")
                    })?;
                }
                (a, b) => check(a == b, || {
                    format!("scene {n} cell ({iou_t}, {m}): AP {a:?} vs {b:?}")
                })?,
            }
            cells += 1;
        }
    }
    Ok(format!(
        "500 scenes, {cells} cells agree; max AP deviation {worst:e}"
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = ThresholdGrid::default();
    for n in 0..100 {
        let scenes = [random_scene(&mut rng)];
        let (gt, preds) = to_inputs(&scenes);
        let g = dense_map(&prepare(&gt, &preds), &grid).ap_grid;
        for i in 0..g.len() {
            for j in 0..g[i].len() {
                let Some(v) = g[i][j] else { continue };
                let below = |o: Option<f64>| o.is_some_and(|x| x <= v);
                if i + 1 < g.len() {
                    check(below(g[i + 1][j]), || {
                        format!("scene {n}: AP rises along IoU at ({i}, {j})")
                    })?;
                }
                if j + 1 < g[i].len() {
                    check(below(g[i][j + 1]), || {
                        format!("scene {n}: AP rises along METEOR at ({i}, {j})")
                    })?;
                }
            }
        }
    }
    Ok("100 scenes, AP non-increasing in both thresholds".into())
}

/// One 5×1 gt segment; the prediction covers 3 pixels, so IoU is 0.6.
fn point_six_scene(caption: &str) -> Scene {
    Scene {
        width: 5,
        height: 1,
        gt_ids: vec![4; 5],
        gt_captions: BTreeMap::from([(4, caption.to_string())]),
        gt_categories: BTreeMap::new(),
        preds: vec![common::ScenePred {
            mask: (0..5).map(|i| i < 3).collect(),
            caption: caption.to_string(),
            score: 0.9,
            category_id: Some(1),
        }],
    }
}

fn criterion_4() -> Outcome {
    let scenes = [point_six_scene("a red ball")];
    let (gt, preds) = to_inputs(&scenes);
    let dense = dense_map(&prepare(&gt, &preds), &ThresholdGrid::default());
    let ones = dense
        .ap_grid
        .iter()
        .flatten()
        .filter(|v| **v == Some(1.0))
        .count();
    let total = dense.ap_grid.iter().flatten().count();
    check(dense.map == Some(0.8), || format!("mAP {:?}", dense.map))?;
    check(ones == 24 && total == 30, || {
        format!("{ones}/{total} cells at AP 1")
    })?;
    Ok(format!(
        "mAP {:.3}, {ones}/{total} cells at AP 1",
        dense.map.unwrap()
    ))
}

fn criterion_5() -> Outcome {
    const PAIRS: &str = include_str!("fixtures/metric_pairs.tsv");
    const EXPECTED: &str = include_str!("fixtures/metric_expected.tsv");
    let (cands, refs): (Vec<_>, Vec<Vec<_>>) = PAIRS
        .lines()
        .map(|line| {
            let mut cols = line.split('\t');
            let cand = tokenize(cols.next().unwrap());
            (cand, cols.map(tokenize).collect())
        })
        .unzip();
    let mut rows = Vec::new();
    let mut corpus = f64::NAN;
    for line in EXPECTED.lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        match cols[0] {
            "#index" => {}
            "#corpus_bleu4" => corpus = cols[1].parse().unwrap(),
            _ => rows.push([1, 2, 3, 4].map(|i| cols[i].parse::<f64>().unwrap())),
        }
    }
    check(cands.len() == 100 && rows.len() == 100, || {
        "fixture must hold 100 pairs".into()
    })?;
    let meteor = Meteor::default();
    let cider = CiderD::new(build_df(&refs)).map_err(|e| e.to_string())?;
    let names = ["BLEU@4", "ROUGE-L", "METEOR", "CIDEr-D"];
    let mut worst = [0.0f64; 4];
    for (i, ((c, r), want)) in cands.iter().zip(&refs).zip(&rows).enumerate() {
        let got = [
            bleu4(c, r),
            rouge_l(c, r),
            meteor.score(c, r),
            cider.score(c, r),
        ];
        for k in 0..4 {
            let d = (got[k] - want[k]).abs();
            worst[k] = worst[k].max(d);
            check(d < 1e-4, || {
                format!("pair {i} {}: {} vs {}", names[k], got[k], want[k])
            })?;
        }
    }
    let cb = corpus_bleu4(cands.iter().zip(refs.iter().map(Vec::as_slice)));
    check((cb - corpus).abs() < 1e-4, || {
        format!("corpus BLEU@4 {cb} vs {corpus}")
    })?;
    Ok(format!(
        "100 pairs; max deviation BLEU@4 {:.1e}, ROUGE-L {:.1e}, METEOR {:.1e}, CIDEr-D {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn product_residual(pq: Option<f64>, sq: Option<f64>, rq: Option<f64>) -> Result<f64, String> {
    match (pq, sq, rq) {
        (Some(p), Some(s), Some(r)) => Ok((p - s * r / 100.0).abs()),
        (None, None, None) => Ok(0.0),
        other => Err(format!("partial PQ triple {other:?}")),
    }
}

/// Pooled results satisfy the identity at every level. Category means do not in general, so
/// under per-category averaging it is checked on each category instead.
fn pq_identity(r: &PqResult) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for c in &r.per_category {
        if let Some((p, s, q)) = c.counts.scores() {
            worst = worst.max(product_residual(Some(p), Some(s), Some(q))?);
        }
    }
    if r.averaging == PqAveraging::Pooled {
        worst = worst.max(product_residual(r.pq, r.sq, r.rq)?);
        worst = worst.max(product_residual(r.pq_th, r.sq_th, r.rq_th)?);
        worst = worst.max(product_residual(r.pq_st, r.sq_st, r.rq_st)?);
    }
    Ok(worst)
}

fn criterion_6() -> Outcome {
    let is_thing = |c: u32| common::CATEGORIES.iter().find(|x| x.0 == c).unwrap().2;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut runs = 0usize;
    for n in 0..500 {
        let s = random_scene(&mut rng);
        let gt_cat: BTreeMap<u32, u32> = s
            .gt_segment_ids()
            .into_iter()
            .map(|id| (id, rng.gen_range(1..=3)))
            .collect();
        let gt = PanopticLabelMap::from_ids(s.width, s.height, s.gt_ids.clone(), |id| {
            (gt_cat[&id], is_thing(gt_cat[&id]))
        })
        .map_err(|e| e.to_string())?;
        // Predicted ids: gt ids with noise, plus a fresh id, each with a category that may disagree.
        let pred_ids: Vec<u32> = s
            .gt_ids
            .iter()
            .map(|&v| match rng.gen_range(0..10) {
                0 => 0,
                1 => 99,
                _ => v,
            })
            .collect();
        let pred_cat: BTreeMap<u32, u32> = pred_ids
            .iter()
            .filter(|&&v| v != 0)
            .map(|&v| {
                (
                    v,
                    if rng.gen_bool(0.8) {
                        gt_cat.get(&v).copied().unwrap_or(1)
                    } else {
                        rng.gen_range(1..=3)
                    },
                )
            })
            .collect();
        let pred = PanopticLabelMap::from_ids(s.width, s.height, pred_ids, |id| {
            (pred_cat[&id], is_thing(pred_cat[&id]))
        })
        .map_err(|e| e.to_string())?;
        for averaging in [PqAveraging::Pooled, PqAveraging::PerCategory] {
            let r = panoptic_quality(&[(&gt, &pred)], averaging).map_err(|e| e.to_string())?;
            let d = pq_identity(&r).map_err(|e| format!("scene {n}: {e}"))?;
            check(d <= 1e-9, || {
                format!("scene {n} {averaging:?}: residual {d:e}")
            })?;
            worst = worst.max(d);
            runs += 1;
        }
    }
    let (gt, preds) = to_inputs(&[point_six_scene("a")]);
    let report = Evaluator::default()
        .evaluate(&gt, &preds)
        .map_err(|e| e.to_string())?;
    let r = report.pq.ok_or("PQ missing on the IoU 0.6 scene")?;
    let d = pq_identity(&r)?;
    check(d <= 1e-9, || format!("IoU 0.6 scene residual {d:e}"))?;
    let pq = r.pq.unwrap_or(f64::NAN);
    check((pq - 60.0).abs() < 1e-9, || {
        format!("IoU 0.6 scene PQ {pq}")
    })?;
    Ok(format!(
        "{runs} runs, max |PQ - SQ*RQ/100| {worst:.1e}; IoU 0.6 scene PQ {pq:.1}"
    ))
}

fn fuzz_text(rng: &mut impl Rng) -> String {
    const PIECES: [&str; 24] = [
        "The objects include:",
        "The interactions include:",
        "1.",
        "2-5.",
        "0.",
        "12 and 3:",
        ":",
        ".",
        "\n",
        "\n\n",
        " ",
        "person",
        "dog: a dog",
        "–",
        "—",
        "and",
        "\t",
        "9999999999999999999999.",
        "é",
        "🙂",
        "\r\n",
        ";",
        "1 and",
        "x:",
    ];
    let mut s = String::new();
    for _ in 0..rng.gen_range(0..40) {
        if rng.gen_bool(0.7) {
            s.push_str(PIECES[rng.gen_range(0..PIECES.len())]);
        } else {
            s.push(char::from_u32(rng.gen_range(0..0x3000)).unwrap_or('?'));
        }
    }
    s
}

fn criterion_7() -> Outcome {
    let object = "The objects include:\n1. Person: the person is wearing a pink jacket, black pants, and a pink beanie.";
    let p = parse_response(object).map_err(|e| e.to_string())?;
    let want = ObjectEntry {
        id: 1,
        summary: "Person".into(),
        description: "the person is wearing a pink jacket, black pants, and a pink beanie.".into(),
    };
    check(
        p.objects == vec![want.clone()] && p.issues.is_empty(),
        || format!("object line parsed as {p:?}"),
    )?;
    let both = format!("{object}\nThe interactions include:\n1 and 2: the person is skiing on the mountain using the skis.");
    let p = parse_response(&both).map_err(|e| e.to_string())?;
    let inter = Interaction {
        ids: (1, 2),
        text: "the person is skiing on the mountain using the skis.".into(),
    };
    check(
        p.objects == vec![want] && p.interactions == vec![inter],
        || format!("interaction line parsed as {p:?}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut panics = 0usize;
    let mut accepted = 0usize;
    for _ in 0..10_000 {
        let text = fuzz_text(&mut rng);
        match catch_unwind(|| parse_response(&text)) {
            Ok(Ok(_)) => accepted += 1,
            Ok(Err(_)) => {}
            Err(_) => panics += 1,
        }
    }
    check(panics == 0, || {
        format!("{panics} panics in 10000 fuzz cases")
    })?;
    Ok(format!(
        "example lines exact; 10000 fuzz cases, 0 panics ({accepted} parsed, rest coded errors)"
    ))
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "requests.jsonl" {
                // The request log is appended in completion order; everything else is fixed.
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let index = write_dataset(root, 12);
    let config = || {
        let mut c = AnnotateConfig::new(root.join("images"), root.join("gt"));
        c.seed = 8;
        c
    };
    let cassette = root.join("cassette.jsonl");
    let live = LoggingClient::open(ScriptedLmm::default(), &cassette).map_err(|e| e.to_string())?;
    let first =
        run_annotate(&index, &config(), &live, &root.join("a")).map_err(|e| e.to_string())?;
    let mut trees = vec![tree(&root.join("a"))];
    for dir in ["b", "c"] {
        let replay = ReplayClient::open(&cassette).map_err(|e| e.to_string())?;
        let s =
            run_annotate(&index, &config(), &replay, &root.join(dir)).map_err(|e| e.to_string())?;
        check(s == first, || format!("summary differs on replay: {s:?}"))?;
        trees.push(tree(&root.join(dir)));
    }
    check(trees.windows(2).all(|w| w[0] == w[1]), || {
        "replayed outputs differ".into()
    })?;

    let out = root.join("resume");
    std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
    let log = out.join("requests.jsonl");
    let half = LoggingClient::open(BudgetClient::new(ScriptedLmm::default(), 6), &log)
        .map_err(|e| e.to_string())?;
    let s1 = run_annotate(&index, &config(), &half, &out).map_err(|e| e.to_string())?;
    let resumed = LoggingClient::open(ScriptedLmm::default(), &log).map_err(|e| e.to_string())?;
    let s2 = run_annotate(&index, &config(), &resumed, &out).map_err(|e| e.to_string())?;
    let forwarded = resumed.forwarded();
    let calls = resumed.into_inner().calls.load(Ordering::SeqCst);
    check(s1.pending == 6 && s2.pending == 0, || {
        format!("pending {} then {}", s1.pending, s2.pending)
    })?;
    check(forwarded == 6 && calls == 6, || {
        format!("resume forwarded {forwarded}, endpoint saw {calls}")
    })?;
    let lines = std::fs::read_to_string(&log).map_err(|e| e.to_string())?;
    let fps: Vec<String> = lines
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["fingerprint"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let unique: std::collections::BTreeSet<_> = fps.iter().collect();
    check(fps.len() == 12 && unique.len() == 12, || {
        format!("{} logged, {} unique", fps.len(), unique.len())
    })?;
    Ok(format!(
        "3 runs byte-identical ({} files); resume after 6 of 12 sent 6 more, 0 duplicates",
        trees[0].len()
    ))
}

fn criterion_9() -> Verdict {
    let Some(path) = std::env::var_os("PANCAP_DATASET").map(PathBuf::from) else {
        return Verdict::Skipped(
            "set PANCAP_DATASET to the released dataset directory or index file".into(),
        );
    };
    let run = || -> Outcome {
        let file = if path.is_dir() {
            path.join("index.json")
        } else {
            path.clone()
        };
        let start = Instant::now();
        let index = DatasetIndex::read(&file).map_err(|e| e.to_string())?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| e.to_string())?;
        let tagger = LexiconTagger::default();
        let report = pool
            .install(|| corpus_report(&index, &tagger, &ReportOptions::default()))
            .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let per_image = (report.captions_per_image * 100.0).round() / 100.0;
        let mut failures = Vec::new();
        if report.captions != 167_254 {
            failures.push(format!("captions {}", report.captions));
        }
        if per_image != 8.14 {
            failures.push(format!("captions/image {:.4}", report.captions_per_image));
        }
        if (report.means.words - 22.94).abs() > 0.5 {
            failures.push(format!("mean words {:.3}", report.means.words));
        }
        if elapsed > Duration::from_secs(120) {
            failures.push(format!("took {elapsed:?}"));
        }
        let advisory = if report.multi_attribute_share >= 0.85 {
            "met"
        } else {
            "not met"
        };
        let detail = format!(
            "captions {}, captions/image {:.2}, mean words {:.2}, >1 attribute {:.3} (advisory, {advisory}), {:.1?}",
            report.captions, report.captions_per_image, report.means.words, report.multi_attribute_share, elapsed
        );
        if failures.is_empty() {
            Ok(detail)
        } else {
            Err(format!("{}; {detail}", failures.join(", ")))
        }
    };
    match run() {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    }
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let all: Vec<u32> = (0..=MAX_SEGMENT_ID).collect();
    let raster = RgbIdPng::from_ids(4096, 4096, &all).map_err(|e| e.to_string())?;
    let back = raster.ids();
    let mismatch = all.iter().zip(&back).position(|(a, b)| a != b);
    check(mismatch.is_none(), || {
        format!("raster sweep breaks at id {mismatch:?}")
    })?;
    let scalar_bad = (0..=MAX_SEGMENT_ID).find(|&id| {
        let (r, g, b) = encode_id(id as u64).unwrap();
        decode_id(r, g, b) != id
    });
    check(scalar_bad.is_none(), || {
        format!("scalar sweep breaks at id {scalar_bad:?}")
    })?;
    check(encode_id(MAX_SEGMENT_ID as u64 + 1).is_err(), || {
        "2^24 must be rejected".into()
    })?;
    let sweep = start.elapsed();
    check(sweep < Duration::from_secs(5), || {
        format!("sweep took {sweep:?}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in 0..1000 {
        let (w, h) = (rng.gen_range(1..=32u32), rng.gen_range(1..=32u32));
        let palette: Vec<u32> = (0..rng.gen_range(1..=8))
            .map(|_| rng.gen_range(0..=MAX_SEGMENT_ID))
            .collect();
        let ids: Vec<u32> = (0..w * h)
            .map(|_| palette[rng.gen_range(0..palette.len())])
            .collect();
        let png = RgbIdPng::from_ids(w, h, &ids)
            .and_then(|r| r.to_png_bytes())
            .map_err(|e| e.to_string())?;
        let decoded = RgbIdPng::from_png_bytes(&png).map_err(|e| e.to_string())?;
        check(
            decoded.width == w && decoded.height == h && decoded.ids() == ids,
            || format!("PNG case {n} differs"),
        )?;
    }
    Ok(format!(
        "2^24 ids round-trip in {sweep:.2?}; 1000 random PNGs round-trip"
    ))
}

fn main() {
    let criteria: Vec<(u32, Box<dyn Fn() -> Verdict>)> = vec![
        (1, Box::new(|| outcome(criterion_1))),
        (2, Box::new(|| outcome(criterion_2))),
        (3, Box::new(|| outcome(criterion_3))),
        (4, Box::new(|| outcome(criterion_4))),
        (5, Box::new(|| outcome(criterion_5))),
        (6, Box::new(|| outcome(criterion_6))),
        (7, Box::new(|| outcome(criterion_7))),
        (8, Box::new(|| outcome(criterion_8))),
        (9, Box::new(criterion_9)),
        (10, Box::new(|| outcome(criterion_10))),
    ];
    let mut failed = Vec::new();
    for (n, run) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        match verdict {
            Verdict::Pass(d) => println!("criterion {n:>2}: PASS    {d}"),
            Verdict::Skipped(d) => println!("criterion {n:>2}: SKIPPED {d}"),
            Verdict::Fail(d) => {
                println!("criterion {n:>2}: FAIL    {d}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn outcome(f: fn() -> Outcome) -> Verdict {
    match f() {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    }
}
