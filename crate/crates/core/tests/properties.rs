mod common;

use std::time::Instant;

use agentprint::features::{extract_features, feature_index, is_timing_feature, N_FEATURES};
use agentprint::ingest::scan_corpus;
use agentprint::perturbation::{inject_delays, DelayBudget};
use agentprint::simulator::{generate_corpus, simulate, suites, ActionMix, ProfileSet, SplitSizes};
use agentprint::trace::{EventKind, Trace};
use agentprint::Error;
use proptest::prelude::*;

fn shifted(t: &Trace, by: u64) -> Trace {
    let events = t
        .events()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.t_ms += by;
            e
        })
        .collect();
    Trace::new(t.meta().clone(), events).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_are_translation_invariant(index in 0usize..200, by in 0u64..1_000_000_000) {
        let traces = common::mixed_traces(200, 5);
        let t = &traces[index];
        let (a, b) = (extract_features(t), extract_features(&shifted(t, by)));
        let first = feature_index("t_first_action_ms").unwrap();
        for j in 0..N_FEATURES {
            if j == first {
                prop_assert_eq!(b.0[j], a.0[j] + by as f64);
            } else {
                prop_assert!(a.0[j].to_bits() == b.0[j].to_bits() || (a.0[j].is_nan() && b.0[j].is_nan()), "feature {}", j);
            }
        }
    }
}

#[test]
fn ratios_stay_in_bounds() {
    let unit = ["click_top_frac", "link_click_ratio", "popstate_ratio", "structural_key_ratio", "click_bbox_area_frac"];
    for t in common::mixed_traces(700, 6) {
        let f = extract_features(&t);
        for name in unit {
            let v = f.get(name).unwrap();
            assert!(v.is_nan() || (0.0..=1.0).contains(&v), "{name} = {v}");
        }
        for j in 0..N_FEATURES {
            let v = f.0[j];
            assert!(v.is_nan() || v >= 0.0, "feature {j} = {v}");
        }
    }
}

#[test]
fn generated_corpus_ingests_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(&suites::extreme(), SplitSizes::new(3, 1, 2), dir.path(), 9).unwrap();
    let scan = scan_corpus(dir.path(), None).unwrap();
    assert!(scan.errors.is_empty(), "{:?}", scan.errors);
    assert!(scan.warnings.is_empty(), "{:?}", scan.warnings);
    let mut expected = corpus.traces.clone();
    expected.sort_by(|a, b| (&a.meta().agent_id, &a.meta().episode_id).cmp(&(&b.meta().agent_id, &b.meta().episode_id)));
    assert_eq!(scan.traces, expected);
}

#[test]
fn same_seed_same_corpus() {
    let p = suites::separable14();
    let a = simulate(&p, SplitSizes::new(2, 0, 1), 4).unwrap();
    let b = simulate(&p, SplitSizes::new(2, 0, 1), 4).unwrap();
    let c = simulate(&p, SplitSizes::new(2, 0, 1), 5).unwrap();
    assert_eq!(a.traces, b.traces);
    assert_ne!(a.traces, c.traces);
}

fn clicks_only() -> ProfileSet {
    let mut p = suites::separable14().agents[0].clone();
    p.action_mix = ActionMix { click: 1.0, keydown: 0.0, scroll: 0.0, focus: 0.0 };
    p.pages.mean = 1.0;
    ProfileSet::new(vec![p]).unwrap()
}

#[test]
fn pure_click_mix_emits_only_clicks() {
    let corpus = simulate(&clicks_only(), SplitSizes::new(50, 0, 0), 2).unwrap();
    for t in &corpus.traces {
        assert!(t.events().iter().all(|e| e.kind() == EventKind::Click));
    }
}

#[test]
fn click_gaps_follow_the_profile_mean() {
    let profiles = clicks_only();
    let expected = profiles.agents[0].iei.click.mean();
    let corpus = simulate(&profiles, SplitSizes::new(400, 0, 0), 3).unwrap();
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in &corpus.traces {
        for w in t.events().windows(2) {
            sum += (w[1].t_ms - w[0].t_ms) as f64;
            n += 1;
        }
    }
    let observed = sum / n as f64;
    assert!((observed / expected - 1.0).abs() < 0.05, "observed {observed}, expected {expected}");
}

#[test]
fn duplicate_agent_ids_are_rejected() {
    let p = suites::separable14().agents[0].clone();
    match ProfileSet::new(vec![p.clone(), p]) {
        Err(Error::Config(msg)) => assert!(msg.contains("duplicate"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn small_corpus_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = suites::clone_pair();
    p.agents.truncate(2);
    let start = Instant::now();
    generate_corpus(&p, SplitSizes::new(10, 5, 5), dir.path(), 1).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "{elapsed:?}");
}

#[test]
fn delays_touch_only_timing_features() {
    let budget = DelayBudget::new(5000).unwrap();
    for t in common::mixed_traces(100, 8) {
        let (a, b) = (extract_features(&t), extract_features(&inject_delays(&t, budget, 1)));
        for j in (0..N_FEATURES).filter(|&j| !is_timing_feature(j)) {
            assert!(a.0[j].to_bits() == b.0[j].to_bits(), "feature {j}");
        }
    }
}
