//! Mapping from the released corpus's field names onto the native episode
//! schema. The alias table is provisional: the public corpus does not
//! document its exact keys, so every guess lives here and nowhere else.

use serde_json::{Map, Value};

use crate::error::{Error, Result};

const EVENT_ARRAY_KEYS: &[&str] = &["events", "dom_events", "trace", "event_trace"];
const KIND_KEYS: &[&str] = &["kind", "type", "event_type", "event"];
const TIME_KEYS: &[&str] = &["t_ms", "t", "ts", "time_ms", "timestamp_ms", "timestamp", "time"];
const DEPTH_KEYS: &[&str] = &["depth_pct", "scroll_pct", "scrollPct", "scroll_depth", "depth", "pct"];
const TARGET_KEYS: &[&str] = &["target", "tag", "tagName", "tag_name"];
const META_ALIASES: &[(&str, &[&str])] = &[
    ("agent_id", &["agent_id", "agentId", "agent"]),
    ("model_name", &["model_name", "model", "modelName"]),
    ("dataset", &["dataset", "dataset_name", "task_type", "task"]),
    ("episode_id", &["episode_id", "episodeId", "id"]),
    ("page_count", &["page_count", "pageCount", "n_pages"]),
    ("urls", &["urls", "visited_urls"]),
];

fn take_first(obj: &mut Map<String, Value>, keys: &[&str]) -> Option<Value> {
    keys.iter().find_map(|k| obj.remove(*k))
}

fn convert_event(raw: Value) -> Result<Value> {
    let Value::Object(mut obj) = raw else {
        return Err(Error::Schema("event must be an object".into()));
    };
    let mut out = Map::new();
    let kind = take_first(&mut obj, KIND_KEYS).ok_or_else(|| Error::Schema("event without a type".into()))?;
    let kind = kind.as_str().unwrap_or_default().to_ascii_lowercase();
    out.insert("kind".into(), Value::from(kind.as_str()));
    if let Some(t) = take_first(&mut obj, TIME_KEYS) {
        // fractional milliseconds are truncated to integer resolution
        let t = match t.as_f64() {
            Some(f) if f >= 0.0 && t.as_u64().is_none() => Value::from(f.floor() as u64),
            _ => t,
        };
        out.insert("t_ms".into(), t);
    }
    match kind.as_str() {
        "click" => {
            for (dst, srcs) in [("x", &["x", "clientX", "client_x"][..]), ("y", &["y", "clientY", "client_y"][..])] {
                if let Some(v) = take_first(&mut obj, srcs) {
                    out.insert(dst.into(), v);
                }
            }
            let is_link = match take_first(&mut obj, &["is_link", "isLink"]) {
                Some(v) => v,
                None => Value::from(obj.get("href").is_some_and(|h| !h.is_null())),
            };
            out.insert("is_link".into(), is_link);
        }
        "scroll" | "beforeunload" => {
            if let Some(v) = take_first(&mut obj, DEPTH_KEYS) {
                out.insert("depth_pct".into(), v);
            }
        }
        "focus" => {
            if let Some(Value::String(tag)) = take_first(&mut obj, TARGET_KEYS) {
                out.insert("target".into(), Value::from(tag.to_ascii_lowercase()));
            }
        }
        "navigate" => {
            if let Some(v) = take_first(&mut obj, &["url", "href", "to"]) {
                out.insert("url".into(), v);
            }
            if let Some(v) = take_first(&mut obj, &["trigger", "nav_type", "navigation_type"]) {
                let t = v.as_str().unwrap_or("other");
                let t = if matches!(t, "http" | "popstate") { t } else { "other" };
                out.insert("trigger".into(), Value::from(t));
            }
        }
        _ => {}
    }
    for (k, v) in obj {
        out.entry(k).or_insert(v);
    }
    Ok(Value::Object(out))
}

/// Rewrites a released-corpus episode into the native schema.
pub fn convert_released(value: Value) -> Result<Value> {
    let Value::Object(mut top) = value else {
        return Err(Error::Schema("episode must be a JSON object".into()));
    };
    let events = take_first(&mut top, EVENT_ARRAY_KEYS).unwrap_or(Value::Array(vec![]));
    let Value::Array(events) = events else {
        return Err(Error::Schema("event list must be an array".into()));
    };
    let mut meta_src = match top.remove("meta").or_else(|| top.remove("metadata")) {
        Some(Value::Object(m)) => m,
        _ => Map::new(),
    };
    let mut meta = Map::new();
    for (dst, srcs) in META_ALIASES {
        if let Some(v) = take_first(&mut meta_src, srcs).or_else(|| take_first(&mut top, srcs)) {
            meta.insert((*dst).into(), v);
        }
    }
    for (k, v) in meta_src {
        meta.entry(k).or_insert(v);
    }
    let events = events.into_iter().map(convert_event).collect::<Result<Vec<_>>>()?;
    let mut out = Map::new();
    out.insert("meta".into(), Value::Object(meta));
    out.insert("events".into(), Value::Array(events));
    Ok(Value::Object(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::episode::episode_from_value;
    use crate::trace::EventPayload;
    use serde_json::json;

    #[test]
    fn maps_aliases() {
        let raw = json!({
            "metadata": {"agentId": "claude", "model": "claude-x", "task_type": "wiki", "id": "q7"},
            "dom_events": [
                {"type": "Click", "timestamp": 12.7, "clientX": 5, "clientY": 6, "href": "/a"},
                {"type": "scroll", "timestamp": 20, "scrollPct": 55.5},
                {"type": "navigate", "timestamp": 30, "url": "https://w.org/", "trigger": "http"},
                {"type": "focus", "timestamp": 31, "tagName": "INPUT"}
            ]
        });
        let parsed = episode_from_value(convert_released(raw).unwrap()).unwrap();
        let t = parsed.trace;
        assert_eq!(t.meta().agent_id, "claude");
        assert_eq!(t.meta().dataset, "wiki");
        assert_eq!(t.events()[0].t_ms, 12);
        assert_eq!(t.events()[0].payload, EventPayload::Click { x: 5.0, y: 6.0, is_link: true });
        assert_eq!(t.events()[3].payload, EventPayload::Focus { target: "input".into() });
    }
}
