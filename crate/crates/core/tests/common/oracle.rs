//! Straight-line reference for the feature catalog, written from the
//! feature definitions without sharing code with the library.

use agentprint::trace::{EventPayload, NavTrigger, Trace};

const NAN: f64 = f64::NAN;

fn avg(v: &[f64]) -> f64 {
    if v.is_empty() {
        return NAN;
    }
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    if v.is_empty() {
        return NAN;
    }
    let m = avg(v);
    let mut s = 0.0;
    for x in v {
        s += (x - m) * (x - m);
    }
    (s / v.len() as f64).sqrt()
}

fn quantile(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r = q * (s.len() as f64 - 1.0);
    let i = r.floor() as usize;
    if i + 1 >= s.len() {
        return s[s.len() - 1];
    }
    s[i] + (r - i as f64) * (s[i + 1] - s[i])
}

fn diffs(t: &[u64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..t.len() {
        out.push((t[i] - t[i - 1]) as f64);
    }
    out
}

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        NAN
    } else {
        a / b
    }
}

fn host_of(url: &str) -> Option<String> {
    let rest = &url[url.find("://")? + 3..];
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let authority = &rest[..end];
    let authority = authority.rsplit('@').next()?;
    let host = authority.split(':').next()?;
    if host.is_empty() {
        None
    } else {
        Some(host.to_lowercase())
    }
}

fn structural(key: &str) -> bool {
    ["Enter", "Tab", "Escape", "Backspace", "Delete"].contains(&key) || key.starts_with("Arrow")
}

pub fn reference_features(trace: &Trace) -> [f64; 41] {
    let ev = trace.events();
    let meta = trace.meta();
    let mut f = [NAN; 41];

    let count = |pred: &dyn Fn(&EventPayload) -> bool| ev.iter().filter(|e| pred(&e.payload)).count() as f64;
    let times_of = |pred: &dyn Fn(&EventPayload) -> bool| -> Vec<u64> {
        ev.iter().filter(|e| pred(&e.payload)).map(|e| e.t_ms).collect()
    };
    let is_click = |p: &EventPayload| matches!(p, EventPayload::Click { .. });
    let is_scroll = |p: &EventPayload| matches!(p, EventPayload::Scroll { .. });
    let is_nav = |p: &EventPayload| matches!(p, EventPayload::Navigate { .. });
    let is_key = |p: &EventPayload| matches!(p, EventPayload::Keydown { .. });
    let is_focus = |p: &EventPayload| matches!(p, EventPayload::Focus { .. });

    let clicks = count(&is_click);
    let scrolls = count(&is_scroll);
    let navs = count(&is_nav);
    let keys = count(&is_key);
    let focus = count(&is_focus);
    let total = ev.len() as f64;

    let mut urls: Vec<String> = Vec::new();
    for e in ev {
        if let EventPayload::Navigate { url, .. } = &e.payload {
            urls.push(url.clone());
        }
    }
    urls.extend(meta.urls.iter().cloned());
    let mut distinct = urls.clone();
    distinct.sort();
    distinct.dedup();
    let pages = match meta.page_count {
        Some(p) => p as f64,
        None => distinct.len() as f64,
    };
    let mut hosts: Vec<String> = urls.iter().filter_map(|u| host_of(u)).collect();
    hosts.sort();
    hosts.dedup();

    f[0] = clicks;
    f[1] = scrolls;
    f[2] = navs;
    f[3] = keys;
    f[4] = focus;
    f[5] = total;
    f[6] = pages;
    f[7] = hosts.len() as f64;

    let t: Vec<u64> = ev.iter().map(|e| e.t_ms).collect();
    let g = diffs(&t);
    f[8] = if t.is_empty() { 0.0 } else { (t[t.len() - 1] - t[0]) as f64 / 1000.0 };
    f[9] = if t.is_empty() { NAN } else { t[0] as f64 };
    f[10] = avg(&g);
    f[11] = sd(&g);
    f[12] = quantile(&g, 0.5);
    f[13] = quantile(&g, 0.1);
    f[14] = quantile(&g, 0.9);
    f[15] = if t.is_empty() {
        NAN
    } else {
        let half = (t[0] as f64 + t[t.len() - 1] as f64) / 2.0;
        let a: Vec<u64> = t.iter().copied().filter(|&x| (x as f64) <= half).collect();
        let b: Vec<u64> = t.iter().copied().filter(|&x| (x as f64) > half).collect();
        if a.len() < 2 || b.len() < 2 {
            NAN
        } else {
            div(avg(&diffs(&b)), avg(&diffs(&a)))
        }
    };

    let cg = diffs(&times_of(&is_click));
    let ng = diffs(&times_of(&is_nav));
    let kg = diffs(&times_of(&is_key));
    f[16] = avg(&cg);
    f[17] = sd(&cg);
    f[18] = avg(&ng);
    f[19] = sd(&ng);
    f[20] = if ng.is_empty() { NAN } else { ng.iter().copied().fold(f64::MIN, f64::max) };
    f[21] = avg(&kg);
    f[22] = sd(&kg);

    let mut depths = Vec::new();
    let mut exits = Vec::new();
    for e in ev {
        match &e.payload {
            EventPayload::Scroll { depth_pct } => depths.push(*depth_pct),
            EventPayload::BeforeUnload { depth_pct } => exits.push(*depth_pct),
            _ => {}
        }
    }
    f[23] = if depths.is_empty() { NAN } else { depths.iter().copied().fold(f64::MIN, f64::max) };
    f[24] = avg(&depths);
    f[25] = depths.iter().filter(|&&d| d > 60.0).count() as f64;
    let mut moves = Vec::new();
    for i in 1..depths.len() {
        if depths[i] > depths[i - 1] {
            moves.push(1);
        } else if depths[i] < depths[i - 1] {
            moves.push(-1);
        }
    }
    f[26] = (1..moves.len()).filter(|&i| moves[i] != moves[i - 1]).count() as f64;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut links = 0.0;
    for e in ev {
        if let EventPayload::Click { x, y, is_link } = &e.payload {
            xs.push(*x);
            ys.push(*y);
            if *is_link {
                links += 1.0;
            }
        }
    }
    f[27] = sd(&xs);
    f[28] = sd(&ys);
    f[29] = if xs.is_empty() {
        NAN
    } else {
        let w = xs.iter().copied().fold(f64::MIN, f64::max) - xs.iter().copied().fold(f64::MAX, f64::min);
        let h = ys.iter().copied().fold(f64::MIN, f64::max) - ys.iter().copied().fold(f64::MAX, f64::min);
        w * h / (1280.0 * 768.0)
    };
    f[30] = div(ys.iter().filter(|&&y| y < 192.0).count() as f64, clicks);
    f[31] = links;
    f[32] = div(links, clicks);

    let mut pops = 0.0;
    let mut structural_keys = 0.0;
    for e in ev {
        match &e.payload {
            EventPayload::Navigate { trigger: NavTrigger::Popstate, .. } => pops += 1.0,
            EventPayload::Keydown { key } if structural(key) => structural_keys += 1.0,
            _ => {}
        }
    }
    f[33] = div(pops, navs);
    f[34] = div(scrolls, clicks);
    f[35] = div(total, pages);
    f[36] = div(navs, clicks);
    f[37] = div(keys, pages);
    f[38] = div(focus, pages);
    f[39] = div(structural_keys, keys);
    f[40] = avg(&exits);
    f
}

/// Indices whose values are integer counts and must match exactly.
pub const COUNT_FEATURES: [usize; 11] = [0, 1, 2, 3, 4, 5, 6, 7, 25, 26, 31];

/// First mismatch between two vectors under the oracle tolerance.
pub fn first_mismatch(got: &[f64], want: &[f64; 41]) -> Option<(usize, f64, f64)> {
    for j in 0..41 {
        let (a, b) = (got[j], want[j]);
        if a.is_nan() && b.is_nan() {
            continue;
        }
        let ok = if COUNT_FEATURES.contains(&j) {
            a == b
        } else {
            a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
        };
        if !ok {
            return Some((j, a, b));
        }
    }
    None
}
