mod common;

use agentprint::features::{extract_features, FEATURE_NAMES};
use agentprint::trace::{EpisodeMetadata, Event, EventPayload, NavTrigger, Trace};
use common::oracle::{first_mismatch, reference_features};
use proptest::prelude::*;

fn check(trace: &Trace) {
    let got = extract_features(trace);
    if let Some((j, a, b)) = first_mismatch(got.as_slice(), &reference_features(trace)) {
        panic!("{} ({}): library {a} vs reference {b}", FEATURE_NAMES[j], trace.meta().episode_id);
    }
}

#[test]
fn simulator_traces_match_reference() {
    for t in common::mixed_traces(500, 77) {
        check(&t);
        check(&t.truncated(t.len() / 3));
    }
}

#[test]
fn empty_and_single_event_traces() {
    let meta = EpisodeMetadata::new("a", "d", "e");
    check(&Trace::new(meta.clone(), vec![]).unwrap());
    check(&Trace::new(meta, vec![Event::new(5, EventPayload::Scroll { depth_pct: 10.0 })]).unwrap());
}

fn payload() -> impl Strategy<Value = EventPayload> {
    let urls = prop::sample::select(vec![
        "https://a.example/x",
        "https://A.example:8080/y?q=1",
        "http://user@b.example/",
        "https://c.example#frag",
        "not a url",
    ]);
    let keys = prop::sample::select(vec!["a", "Enter", "ArrowUp", "Tab", "z", "Backspace"]);
    prop_oneof![
        (0.0..1280.0f64, 0.0..768.0f64, any::<bool>()).prop_map(|(x, y, is_link)| EventPayload::Click { x, y, is_link }),
        keys.prop_map(|k| EventPayload::Keydown { key: k.to_string() }),
        (0u8..=10).prop_map(|d| EventPayload::Scroll { depth_pct: d as f64 * 10.0 }),
        (urls, any::<bool>()).prop_map(|(u, pop)| EventPayload::Navigate {
            url: u.to_string(),
            trigger: if pop { NavTrigger::Popstate } else { NavTrigger::Http },
        }),
        (0.0..100.0f64).prop_map(|d| EventPayload::BeforeUnload { depth_pct: d }),
        Just(EventPayload::Focus { target: "input".into() }),
    ]
}

proptest! {
    #[test]
    fn random_traces_match_reference(
        events in prop::collection::vec((0u64..5000, payload()), 0..60),
        page_count in prop::option::of(0u64..6),
        start in prop::option::of(Just("https://start.example/")),
    ) {
        let mut meta = EpisodeMetadata::new("a", "d", "e");
        meta.page_count = page_count;
        meta.urls = start.into_iter().map(String::from).collect();
        let events = events.into_iter().map(|(t, p)| Event::new(t, p)).collect();
        check(&Trace::new(meta, events).unwrap());
    }
}
