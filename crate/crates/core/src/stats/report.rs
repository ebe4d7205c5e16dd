use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{caption_stats, words, CaptionStats, Pos, Result, StatsError, Tagger};
use crate::dataset::DatasetIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Width of the log10(words) bins.
    pub bin_width: f64,
    pub top_k: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            bin_width: 0.1,
            top_k: 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStats {
    pub characters: f64,
    pub words: f64,
    pub sentences: f64,
    pub nouns: f64,
    pub adjectives: f64,
    pub adverbs: f64,
    pub verbs: f64,
    pub attributes: f64,
}

/// `[lo, hi)` in log10(words); captions with no words fall in the first bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub captions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub images: u64,
    pub captions: u64,
    pub captions_per_image: f64,
    pub totals: BTreeMap<String, u64>,
    pub means: MeanStats,
    /// Attribute count per caption → number of captions.
    pub attribute_histogram: BTreeMap<usize, u64>,
    /// Share of captions with more than one attribute.
    pub multi_attribute_share: f64,
    pub bin_width: f64,
    pub length_histogram: Vec<HistogramBin>,
    pub top_words: BTreeMap<Pos, Vec<WordCount>>,
}

fn bin_of(words: usize, width: f64) -> i64 {
    ((words.max(1) as f64).log10() / width + 1e-9).floor() as i64
}

/// Aggregates per-caption statistics over every non-empty caption in `index`.
pub fn corpus_report(
    index: &DatasetIndex,
    tagger: &dyn Tagger,
    opts: &ReportOptions,
) -> Result<CorpusReport> {
    let captions: Vec<&str> = index.captions().filter(|c| !c.trim().is_empty()).collect();
    report_from_captions(index.images.len() as u64, &captions, tagger, opts)
}

/// As [`corpus_report`], over a bare caption list.
pub fn report_from_captions(
    images: u64,
    captions: &[&str],
    tagger: &dyn Tagger,
    opts: &ReportOptions,
) -> Result<CorpusReport> {
    if captions.is_empty() || images == 0 {
        return Err(StatsError::Empty);
    }
    let per: Vec<(CaptionStats, Vec<(String, Pos)>)> = captions
        .par_iter()
        .map(|c| {
            let ws = words(c);
            let tags = tagger.tag(&ws);
            (caption_stats(c, tagger), ws.into_iter().zip(tags).collect())
        })
        .collect();

    let mut sums = [0u64; 8];
    let mut attribute_histogram = BTreeMap::new();
    let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
    let mut tallies: HashMap<Pos, HashMap<&str, u64>> = HashMap::new();
    for (s, tagged) in &per {
        let v = [
            s.characters,
            s.words,
            s.sentences,
            s.nouns,
            s.adjectives,
            s.adverbs,
            s.verbs,
            s.attributes,
        ];
        for (acc, x) in sums.iter_mut().zip(v) {
            *acc += x as u64;
        }
        *attribute_histogram.entry(s.attributes).or_insert(0) += 1;
        *bins.entry(bin_of(s.words, opts.bin_width)).or_insert(0) += 1;
        for (w, p) in tagged {
            if *p != Pos::Other {
                *tallies
                    .entry(*p)
                    .or_default()
                    .entry(w.as_str())
                    .or_insert(0) += 1;
            }
        }
    }
    let n = captions.len() as u64;
    let mean = |i: usize| sums[i] as f64 / n as f64;
    let names = [
        "characters",
        "words",
        "sentences",
        "nouns",
        "adjectives",
        "adverbs",
        "verbs",
        "attributes",
    ];

    let (first, last) = (*bins.keys().next().unwrap(), *bins.keys().last().unwrap());
    let length_histogram = (first..=last)
        .map(|k| HistogramBin {
            lo: k as f64 * opts.bin_width,
            hi: (k + 1) as f64 * opts.bin_width,
            captions: bins.get(&k).copied().unwrap_or(0),
        })
        .collect();

    let top_words = Pos::COUNTED
        .iter()
        .map(|p| {
            let mut list: Vec<WordCount> = tallies
                .get(p)
                .into_iter()
                .flatten()
                .map(|(w, &c)| WordCount {
                    word: w.to_string(),
                    count: c,
                })
                .collect();
            list.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
            list.truncate(opts.top_k);
            (*p, list)
        })
        .collect();

    let multi = attribute_histogram.range(2..).map(|(_, c)| c).sum::<u64>();
    Ok(CorpusReport {
        images,
        captions: n,
        captions_per_image: n as f64 / images as f64,
        totals: names
            .iter()
            .zip(sums)
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        means: MeanStats {
            characters: mean(0),
            words: mean(1),
            sentences: mean(2),
            nouns: mean(3),
            adjectives: mean(4),
            adverbs: mean(5),
            verbs: mean(6),
            attributes: mean(7),
        },
        attribute_histogram,
        multi_attribute_share: multi as f64 / n as f64,
        bin_width: opts.bin_width,
        length_histogram,
        top_words,
    })
}

impl CorpusReport {
    pub fn summary_csv(&self) -> String {
        let m = &self.means;
        let mut s = String::from("metric,value\n");
        let rows: [(&str, String); 12] = [
            ("images", self.images.to_string()),
            ("captions", self.captions.to_string()),
            (
                "captions_per_image",
                format!("{:.6}", self.captions_per_image),
            ),
            ("mean_characters", format!("{:.6}", m.characters)),
            ("mean_words", format!("{:.6}", m.words)),
            ("mean_sentences", format!("{:.6}", m.sentences)),
            ("mean_nouns", format!("{:.6}", m.nouns)),
            ("mean_adjectives", format!("{:.6}", m.adjectives)),
            ("mean_adverbs", format!("{:.6}", m.adverbs)),
            ("mean_verbs", format!("{:.6}", m.verbs)),
            ("mean_attributes", format!("{:.6}", m.attributes)),
            (
                "multi_attribute_share",
                format!("{:.6}", self.multi_attribute_share),
            ),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }

    pub fn length_histogram_csv(&self) -> String {
        let mut s = String::from("log10_words_lo,log10_words_hi,captions\n");
        for b in &self.length_histogram {
            let _ = writeln!(s, "{:.4},{:.4},{}", b.lo, b.hi, b.captions);
        }
        s
    }

    pub fn attribute_histogram_csv(&self) -> String {
        let mut s = String::from("attributes,captions,share\n");
        for (a, c) in &self.attribute_histogram {
            let _ = writeln!(s, "{a},{c},{:.6}", *c as f64 / self.captions as f64);
        }
        s
    }

    pub fn top_words_csv(&self) -> String {
        let mut s = String::from("pos,rank,word,count\n");
        for (p, list) in &self.top_words {
            for (i, w) in list.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", p.name(), i + 1, w.word, w.count);
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Writes `summary.csv`, `length_histogram.csv`, `attribute_histogram.csv` and `top_words.csv`.
pub fn emit_plot_data(report: &CorpusReport, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StatsError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let files = [
        ("summary.csv", report.summary_csv()),
        ("length_histogram.csv", report.length_histogram_csv()),
        ("attribute_histogram.csv", report.attribute_histogram_csv()),
        ("top_words.csv", report.top_words_csv()),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
