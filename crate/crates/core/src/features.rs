//! The 41 behavioral features computed from one episode.
//!
//! Degenerate inputs never fail: a statistic whose denominator or sample is
//! empty is reported as [`MISSING`] (NaN) rather than 0, so "no link clicks"
//! stays distinguishable from "no clicks at all".

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::trace::{EventPayload, NavTrigger, Trace, VIEWPORT_HEIGHT, VIEWPORT_WIDTH};

pub const N_FEATURES: usize = 41;

/// Missing-value sentinel.
pub const MISSING: f64 = f64::NAN;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    // event volume
    "n_clicks",
    "n_scrolls",
    "n_navigations",
    "n_keydowns",
    "n_focus",
    "n_events_total",
    "page_count",
    "n_unique_domains",
    // global timing
    "total_duration_s",
    "t_first_action_ms",
    "mean_iei_ms",
    "std_iei_ms",
    "median_iei_ms",
    "p10_iei_ms",
    "p90_iei_ms",
    "iei_trend",
    // per-type latency
    "mean_click_iei_ms",
    "std_click_iei_ms",
    "mean_nav_iei_ms",
    "std_nav_iei_ms",
    "max_page_dwell_ms",
    "mean_key_iei_ms",
    "std_key_iei_ms",
    // scrolling
    "max_scroll_pct",
    "mean_scroll_pct",
    "n_deep_scrolls",
    "scroll_reversals",
    // click spatial distribution
    "click_x_std",
    "click_y_std",
    "click_bbox_area_frac",
    "click_top_frac",
    "n_link_clicks",
    "link_click_ratio",
    // navigation strategy
    "popstate_ratio",
    "scroll_to_click_ratio",
    "actions_per_page",
    "nav_to_click_ratio",
    "keydowns_per_page",
    "focus_per_page",
    "structural_key_ratio",
    // exit behavior
    "mean_exit_scroll_pct",
];

/// Feature families used when reasoning about which signals a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureFamily {
    Volume,
    GlobalTiming,
    TypeLatency,
    Scroll,
    ClickSpatial,
    Navigation,
    Exit,
}

impl FeatureFamily {
    pub fn is_timing(self) -> bool {
        matches!(self, FeatureFamily::GlobalTiming | FeatureFamily::TypeLatency)
    }
}

pub fn feature_family(index: usize) -> FeatureFamily {
    match index {
        0..=7 => FeatureFamily::Volume,
        8..=15 => FeatureFamily::GlobalTiming,
        16..=22 => FeatureFamily::TypeLatency,
        23..=26 => FeatureFamily::Scroll,
        27..=32 => FeatureFamily::ClickSpatial,
        33..=39 => FeatureFamily::Navigation,
        40 => FeatureFamily::Exit,
        _ => panic!("feature index {index} out of range"),
    }
}

pub fn is_timing_feature(index: usize) -> bool {
    feature_family(index).is_timing()
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Hex SHA-256 of the ordered feature names; stored in model files.
pub fn catalog_hash() -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for name in FEATURE_NAMES {
        hasher.update(name.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

pub const DEEP_SCROLL_PCT: f64 = 60.0;
pub const TOP_BAND_PX: f64 = 192.0;

pub fn is_structural_key(key: &str) -> bool {
    matches!(key, "Enter" | "Tab" | "Escape" | "Backspace" | "Delete") || key.starts_with("Arrow")
}

/// Summary of an interval sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IeiStats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Mean, population std and linearly interpolated percentiles. Empty input
/// yields all sentinels.
pub fn iei_stats(intervals: &[f64]) -> IeiStats {
    if intervals.is_empty() {
        return IeiStats {
            mean: MISSING,
            std: MISSING,
            median: MISSING,
            p10: MISSING,
            p90: MISSING,
        };
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(f64::total_cmp);
    IeiStats {
        mean: mean(intervals),
        std: pop_std(intervals),
        median: percentile_sorted(&sorted, 0.5),
        p10: percentile_sorted(&sorted, 0.1),
        p90: percentile_sorted(&sorted, 0.9),
    }
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return MISSING;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn pop_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return MISSING;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        MISSING
    } else {
        num as f64 / den as f64
    }
}

fn gaps(times: &[u64]) -> Vec<f64> {
    times.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
}

/// Number of direction changes in a depth sequence; flat steps are ignored.
pub fn scroll_reversals(depths: &[f64]) -> usize {
    let mut last_sign = 0.0;
    let mut count = 0;
    for w in depths.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 {
            continue;
        }
        let sign = d.signum();
        if last_sign != 0.0 && sign != last_sign {
            count += 1;
        }
        last_sign = sign;
    }
    count
}

/// Ratio of the mean gap in the later half of the episode to the earlier
/// half. Halves are split at the temporal midpoint of the first and last
/// event; only gaps whose endpoints both fall in a half count toward it.
fn iei_trend(times: &[u64]) -> f64 {
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return MISSING;
    };
    let mid = (first as f64 + last as f64) / 2.0;
    let early: Vec<u64> = times.iter().copied().filter(|&t| t as f64 <= mid).collect();
    let late: Vec<u64> = times.iter().copied().filter(|&t| t as f64 > mid).collect();
    if early.len() < 2 || late.len() < 2 {
        return MISSING;
    }
    let early_mean = mean(&gaps(&early));
    let late_mean = mean(&gaps(&late));
    if early_mean == 0.0 {
        return MISSING;
    }
    late_mean / early_mean
}

fn hostname(url: &str) -> Option<String> {
    url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(|h| h.to_ascii_lowercase()))
}

/// Computes the full feature vector for one trace.
pub fn extract_features(trace: &Trace) -> FeatureVector {
    let events = trace.events();
    let meta = trace.meta();

    let mut click_times = Vec::new();
    let mut nav_times = Vec::new();
    let mut key_times = Vec::new();
    let mut click_xs = Vec::new();
    let mut click_ys = Vec::new();
    let mut scroll_depths = Vec::new();
    let mut exit_depths = Vec::new();
    let mut n_link_clicks = 0usize;
    let mut n_popstate = 0usize;
    let mut n_structural = 0usize;
    let mut n_focus = 0usize;
    let mut nav_urls: Vec<&str> = Vec::new();

    for e in events {
        match &e.payload {
            EventPayload::Click { x, y, is_link } => {
                click_times.push(e.t_ms);
                click_xs.push(*x);
                click_ys.push(*y);
                if *is_link {
                    n_link_clicks += 1;
                }
            }
            EventPayload::Keydown { key } => {
                key_times.push(e.t_ms);
                if is_structural_key(key) {
                    n_structural += 1;
                }
            }
            EventPayload::Scroll { depth_pct } => scroll_depths.push(*depth_pct),
            EventPayload::Navigate { url, trigger } => {
                nav_times.push(e.t_ms);
                nav_urls.push(url);
                if *trigger == NavTrigger::Popstate {
                    n_popstate += 1;
                }
            }
            EventPayload::BeforeUnload { depth_pct } => exit_depths.push(*depth_pct),
            EventPayload::Focus { .. } => n_focus += 1,
        }
    }

    let n_clicks = click_times.len();
    let n_scrolls = scroll_depths.len();
    let n_navs = nav_times.len();
    let n_keys = key_times.len();
    let n_total = events.len();

    let all_urls = || nav_urls.iter().copied().chain(meta.urls.iter().map(String::as_str));
    let page_count = match meta.page_count {
        Some(p) => p as usize,
        None => all_urls().collect::<BTreeSet<_>>().len(),
    };
    let n_domains = all_urls().filter_map(hostname).collect::<BTreeSet<_>>().len();

    let times: Vec<u64> = events.iter().map(|e| e.t_ms).collect();
    let all_gaps = gaps(&times);
    let stats = iei_stats(&all_gaps);
    let total_duration_s = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) => (b - a) as f64 / 1000.0,
        _ => 0.0,
    };
    let t_first = times.first().map_or(MISSING, |&t| t as f64);

    let click_gaps = gaps(&click_times);
    let nav_gaps = gaps(&nav_times);
    let key_gaps = gaps(&key_times);
    let max_dwell = nav_gaps.iter().copied().reduce(f64::max).unwrap_or(MISSING);

    let max_scroll = scroll_depths.iter().copied().reduce(f64::max).unwrap_or(MISSING);
    let n_deep = scroll_depths.iter().filter(|&&d| d > DEEP_SCROLL_PCT).count();

    let bbox_frac = if n_clicks == 0 {
        MISSING
    } else {
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        span(&click_xs) * span(&click_ys) / (VIEWPORT_WIDTH * VIEWPORT_HEIGHT)
    };
    let n_top = click_ys.iter().filter(|&&y| y < TOP_BAND_PX).count();

    FeatureVector([
        n_clicks as f64,
        n_scrolls as f64,
        n_navs as f64,
        n_keys as f64,
        n_focus as f64,
        n_total as f64,
        page_count as f64,
        n_domains as f64,
        total_duration_s,
        t_first,
        stats.mean,
        stats.std,
        stats.median,
        stats.p10,
        stats.p90,
        iei_trend(&times),
        mean(&click_gaps),
        pop_std(&click_gaps),
        mean(&nav_gaps),
        pop_std(&nav_gaps),
        max_dwell,
        mean(&key_gaps),
        pop_std(&key_gaps),
        max_scroll,
        mean(&scroll_depths),
        n_deep as f64,
        scroll_reversals(&scroll_depths) as f64,
        pop_std(&click_xs),
        pop_std(&click_ys),
        bbox_frac,
        ratio(n_top, n_clicks),
        n_link_clicks as f64,
        ratio(n_link_clicks, n_clicks),
        ratio(n_popstate, n_navs),
        ratio(n_scrolls, n_clicks),
        ratio(n_total, page_count),
        ratio(n_navs, n_clicks),
        ratio(n_keys, page_count),
        ratio(n_focus, page_count),
        ratio(n_structural, n_keys),
        mean(&exit_depths),
    ])
}
