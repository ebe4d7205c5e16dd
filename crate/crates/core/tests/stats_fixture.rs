use pancap_core::stats::{
    caption_stats, emit_plot_data, report_from_captions, LexiconTagger, ReportOptions,
};
use proptest::prelude::*;

const HAND: &str = include_str!("fixtures/pos_hand_tagged.tsv");

#[test]
fn hand_tagged_counts() {
    let tagger = LexiconTagger::default();
    let mut rows = 0;
    for line in HAND.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.split('\t').collect();
        let want: Vec<usize> = cols[1..].iter().map(|c| c.parse().unwrap()).collect();
        let s = caption_stats(cols[0], &tagger);
        let got = vec![
            s.words,
            s.sentences,
            s.nouns,
            s.adjectives,
            s.adverbs,
            s.verbs,
            s.attributes,
        ];
        assert_eq!(got, want, "{}", cols[0]);
        rows += 1;
    }
    assert_eq!(rows, 20);
}

#[test]
fn plot_files_are_stable() {
    let caps: Vec<&str> = HAND
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    let tagger = LexiconTagger::default();
    let report = report_from_captions(5, &caps, &tagger, &ReportOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    emit_plot_data(&report, &a).unwrap();
    emit_plot_data(&report, &b).unwrap();
    for name in [
        "summary.csv",
        "length_histogram.csv",
        "attribute_histogram.csv",
        "top_words.csv",
    ] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap()
        );
    }
    // Word counts 7..13 span log10 bins 0.8, 0.9 and 1.1 (1.0 empty), so four rows.
    let hist = std::fs::read_to_string(a.join("length_histogram.csv")).unwrap();
    assert_eq!(
        hist,
        "log10_words_lo,log10_words_hi,captions\n0.8000,0.9000,1\n0.9000,1.0000,6\n1.0000,1.1000,10\n1.1000,1.2000,3\n"
    );
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.contains("captions_per_image,4.000000\n"));
    assert!(summary.contains("mean_words,10.450000\n"));
}

proptest! {
    #[test]
    fn report_is_order_invariant_and_consistent(
        caps in prop::collection::vec("[A-Za-z ,.!?]{0,60}", 1..20),
        seed in any::<u64>(),
    ) {
        let tagger = LexiconTagger::default();
        let refs: Vec<&str> = caps.iter().map(String::as_str).collect();
        let mut shuffled = refs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed as usize).wrapping_add(i * 7919) % (i + 1));
        }
        let opts = ReportOptions::default();
        let a = report_from_captions(3, &refs, &tagger, &opts).unwrap();
        let b = report_from_captions(3, &shuffled, &tagger, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.length_histogram.iter().map(|b| b.captions).sum::<u64>(), n as u64);
        let raw: f64 = refs.iter().map(|c| caption_stats(c, &tagger).words as f64).sum::<f64>() / n as f64;
        prop_assert!((raw - a.means.words).abs() < 1e-9);
        for c in &refs {
            let s = caption_stats(c, &tagger);
            prop_assert!(s.attributes >= s.adjectives);
            prop_assert!(s.nouns + s.adjectives + s.adverbs + s.verbs <= s.words);
            if s.words > 0 {
                prop_assert!(s.words >= s.sentences && s.sentences >= 1);
            }
        }
    }
}
