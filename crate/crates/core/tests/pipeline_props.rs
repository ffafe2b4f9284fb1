use std::collections::{BTreeMap, BTreeSet};

use esa_core::harness::corpus::Corpus;
use esa_core::harness::pipeline::run_scenario;
use esa_core::{ScenarioConfig, ThresholdPolicy};

fn naive(seed: u64, t: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::preset("naive").unwrap();
    c.vocab_size = 500;
    c.n_samples = 3_000;
    c.seed = seed;
    c.policy = ThresholdPolicy::naive(t);
    c.output_dir = format!("s{seed}-t{t}").into();
    c
}

fn above(corpus: &Corpus, t: u64) -> BTreeSet<String> {
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for l in &corpus.lines {
        *freq.entry(l).or_default() += 1;
    }
    freq.into_iter()
        .filter(|&(_, n)| n > t)
        .map(|(w, _)| w.to_string())
        .collect()
}

#[test]
fn recovery_is_exact_and_monotone_in_t() {
    let dir = tempfile::tempdir().unwrap();
    for seed in [1, 2, 3] {
        let mut last: Option<(f64, BTreeSet<String>)> = None;
        for t in [1, 5, 20, 100] {
            let out = run_scenario(&naive(seed, t), dir.path()).unwrap();
            let corpus = Corpus::load(&out.output_dir.join("corpus.txt")).unwrap();
            assert_eq!(out.recovered, above(&corpus, t), "seed {seed}, T {t}");
            assert_eq!(out.report.decode.decrypt_failures, 0);
            if let Some((ratio, prev)) = &last {
                assert!(out.report.recovery_ratio <= *ratio);
                assert!(out.recovered.is_subset(prev));
            }
            last = Some((out.report.recovery_ratio, out.recovered));
        }
    }
}

#[test]
fn survivors_are_counted_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&naive(4, 5), dir.path()).unwrap();
    let stats = out.report.shuffler.clone();
    assert_eq!(stats.input_count, 3_000);
    let h = out.analysis.histogram.unwrap();
    assert_eq!(h.total() as usize, stats.surviving_count);
    assert_eq!(out.report.decode.input, stats.surviving_count);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.output_dir.join("shuffler_stats.json")).unwrap()).unwrap();
    assert_eq!(json["surviving_count"], stats.surviving_count);
}

#[test]
fn config_file_round_trip_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ScenarioConfig::preset("secret_crowd").unwrap();
    c.vocab_size = 300;
    c.n_samples = 1_500;
    c.release_epsilon = Some(1.0);
    let parsed = ScenarioConfig::from_config(&c.to_config()).unwrap();
    let mut copy = parsed.clone();
    copy.output_dir = "copy".into();
    let a = run_scenario(&parsed, dir.path()).unwrap();
    let b = run_scenario(&copy, dir.path()).unwrap();
    for f in ["histogram.csv", "released.csv", "decode_stats.json"] {
        assert_eq!(
            std::fs::read(a.output_dir.join(f)).unwrap(),
            std::fs::read(b.output_dir.join(f)).unwrap(),
            "{f}"
        );
    }
}
