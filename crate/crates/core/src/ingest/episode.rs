//! Parsing one episode file.
//!
//! Schema:
//!
//! ```text
//! { "meta":   { "agent_id", "model_name", "dataset", "episode_id",
//!               "page_count"?, "urls"?, ... },
//!   "events": [ { "kind", "t_ms", ...payload }, ... ] }
//! ```
//!
//! Payload fields per kind: click `x`, `y`, `is_link`; keydown `key`;
//! scroll and beforeunload `depth_pct`; navigate `url`, `trigger`
//! (`http` | `popstate` | `other`); focus `target`. Unrecognized keys are
//! kept on the event and written back unchanged.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::trace::{
    EpisodeMetadata, Event, EventKind, EventPayload, NavTrigger, Trace, VIEWPORT_HEIGHT, VIEWPORT_WIDTH,
};

#[derive(Debug, Clone)]
pub struct ParsedEpisode {
    pub trace: Trace,
    pub warnings: Vec<String>,
}

/// Parses an episode, logging any validation warnings.
pub fn parse_episode(bytes: &[u8]) -> Result<Trace> {
    let parsed = parse_episode_with_warnings(bytes)?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", parsed.trace.meta().episode_id);
    }
    Ok(parsed.trace)
}

pub fn parse_episode_with_warnings(bytes: &[u8]) -> Result<ParsedEpisode> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    episode_from_value(value)
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = bytes
        .split(|&b| b == b'\n')
        .take(line - 1)
        .map(|l| l.len() + 1)
        .sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

pub(crate) fn episode_from_value(value: Value) -> Result<ParsedEpisode> {
    let Value::Object(mut top) = value else {
        return Err(Error::Schema("episode must be a JSON object".into()));
    };
    let meta = match top.remove("meta") {
        Some(Value::Object(m)) => parse_meta(m)?,
        Some(_) => return Err(Error::Schema("meta must be an object".into())),
        None => return Err(Error::Schema("missing meta".into())),
    };
    let raw_events = match top.remove("events") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(Error::Schema("events must be an array".into())),
        None => return Err(Error::Schema("missing events".into())),
    };

    let mut warnings = Vec::new();
    let mut events = Vec::with_capacity(raw_events.len());
    for (i, raw) in raw_events.into_iter().enumerate() {
        let event = parse_event(raw).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("event {i}: {msg}")),
            other => other,
        })?;
        if let EventPayload::Click { x, y, .. } = event.payload {
            if !(0.0..=VIEWPORT_WIDTH).contains(&x) || !(0.0..=VIEWPORT_HEIGHT).contains(&y) {
                warnings.push(format!("event {i}: click ({x}, {y}) lies outside the 1280x768 viewport"));
            }
        }
        events.push(event);
    }
    if events.windows(2).any(|w| w[0].t_ms > w[1].t_ms) {
        warnings.push("events were not in timestamp order; sorted".into());
    }
    let trace = Trace::new(meta, events)?;
    Ok(ParsedEpisode { trace, warnings })
}

fn take_str(obj: &mut Map<String, Value>, key: &str) -> Result<Option<String>> {
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(Error::Schema(format!("{key} must be a string, got {other}"))),
    }
}

fn parse_meta(mut obj: Map<String, Value>) -> Result<EpisodeMetadata> {
    let agent_id = take_str(&mut obj, "agent_id")?.unwrap_or_default();
    let model_name = take_str(&mut obj, "model_name")?.unwrap_or_default();
    let dataset = take_str(&mut obj, "dataset")?.unwrap_or_default();
    let episode_id = take_str(&mut obj, "episode_id")?.unwrap_or_default();
    let page_count = match obj.remove("page_count") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| Error::Schema(format!("page_count must be a non-negative integer, got {v}")))?,
        ),
    };
    let urls = match obj.remove("urls") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                other => Err(Error::Schema(format!("urls entries must be strings, got {other}"))),
            })
            .collect::<Result<_>>()?,
        Some(other) => return Err(Error::Schema(format!("urls must be an array, got {other}"))),
    };
    if agent_id.is_empty() {
        return Err(Error::Schema("meta.agent_id must be non-empty".into()));
    }
    Ok(EpisodeMetadata {
        agent_id,
        model_name,
        dataset,
        episode_id,
        page_count,
        urls,
        extra: obj,
    })
}

fn parse_timestamp(v: Option<Value>) -> Result<u64> {
    let v = v.ok_or_else(|| Error::Schema("missing t_ms".into()))?;
    if let Some(t) = v.as_u64() {
        return Ok(t);
    }
    match v.as_f64() {
        Some(t) if t < 0.0 => Err(Error::Schema(format!("negative timestamp {t}"))),
        Some(t) if t.fract() == 0.0 && t <= u64::MAX as f64 => Ok(t as u64),
        _ => Err(Error::Schema(format!("t_ms must be a non-negative integer, got {v}"))),
    }
}

fn take_f64(obj: &mut Map<String, Value>, key: &str) -> Result<f64> {
    match obj.remove(key) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Schema(format!("{key} must be a number, got {v}"))),
        None => Err(Error::Schema(format!("missing {key}"))),
    }
}

fn take_depth(obj: &mut Map<String, Value>) -> Result<f64> {
    let d = take_f64(obj, "depth_pct")?;
    if !(0.0..=100.0).contains(&d) {
        return Err(Error::Schema(format!("depth_pct {d} outside [0, 100]")));
    }
    Ok(d)
}

fn parse_event(raw: Value) -> Result<Event> {
    let Value::Object(mut obj) = raw else {
        return Err(Error::Schema("event must be an object".into()));
    };
    let kind: EventKind = match obj.remove("kind") {
        Some(Value::String(s)) => s.parse()?,
        Some(other) => return Err(Error::Schema(format!("kind must be a string, got {other}"))),
        None => return Err(Error::Schema("missing kind".into())),
    };
    let t_ms = parse_timestamp(obj.remove("t_ms"))?;
    let payload = match kind {
        EventKind::Click => {
            let x = take_f64(&mut obj, "x")?;
            let y = take_f64(&mut obj, "y")?;
            let is_link = match obj.remove("is_link") {
                None | Some(Value::Null) => false,
                Some(Value::Bool(b)) => b,
                Some(other) => return Err(Error::Schema(format!("is_link must be a boolean, got {other}"))),
            };
            EventPayload::Click { x, y, is_link }
        }
        EventKind::Keydown => EventPayload::Keydown {
            key: take_str(&mut obj, "key")?.ok_or_else(|| Error::Schema("missing key".into()))?,
        },
        EventKind::Scroll => EventPayload::Scroll {
            depth_pct: take_depth(&mut obj)?,
        },
        EventKind::BeforeUnload => EventPayload::BeforeUnload {
            depth_pct: take_depth(&mut obj)?,
        },
        EventKind::Navigate => {
            let url = take_str(&mut obj, "url")?.ok_or_else(|| Error::Schema("missing url".into()))?;
            let trigger = match take_str(&mut obj, "trigger")? {
                Some(t) => t.parse()?,
                None => NavTrigger::Other,
            };
            EventPayload::Navigate { url, trigger }
        }
        EventKind::Focus => EventPayload::Focus {
            target: take_str(&mut obj, "target")?.unwrap_or_default(),
        },
    };
    Ok(Event {
        t_ms,
        payload,
        extra: obj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"meta":{"agent_id":"gpt","episode_id":"q1"},
        "events":[{"kind":"click","t_ms":120,"x":640,"y":384,"is_link":true}]}"#;

    #[test]
    fn minimal_click() {
        let t = parse_episode(MINIMAL.as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.events()[0].t_ms, 120);
        assert_eq!(
            t.events()[0].payload,
            EventPayload::Click { x: 640.0, y: 384.0, is_link: true }
        );
    }

    #[test]
    fn out_of_order_is_sorted_with_warning() {
        let src = r#"{"meta":{"agent_id":"a"},"events":[
            {"kind":"keydown","t_ms":300,"key":"c"},
            {"kind":"keydown","t_ms":100,"key":"a"},
            {"kind":"keydown","t_ms":300,"key":"d"},
            {"kind":"keydown","t_ms":200,"key":"b"}]}"#;
        let parsed = parse_episode_with_warnings(src.as_bytes()).unwrap();
        let mut manual = [(300, "c"), (100, "a"), (300, "d"), (200, "b")];
        manual.sort_by_key(|p| p.0);
        let got: Vec<_> = parsed
            .trace
            .events()
            .iter()
            .map(|e| match &e.payload {
                EventPayload::Keydown { key } => (e.t_ms, key.clone()),
                _ => unreachable!(),
            })
            .collect();
        let want: Vec<_> = manual.iter().map(|(t, k)| (*t as u64, k.to_string())).collect();
        assert_eq!(got, want);
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn unknown_kind_is_named() {
        let src = r#"{"meta":{"agent_id":"a"},"events":[{"kind":"mousemove","t_ms":1}]}"#;
        match parse_episode(src.as_bytes()) {
            Err(Error::Schema(msg)) => assert!(msg.contains("mousemove"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn negative_timestamp() {
        let src = r#"{"meta":{"agent_id":"a"},"events":[{"kind":"focus","t_ms":-5,"target":"input"}]}"#;
        match parse_episode(src.as_bytes()) {
            Err(Error::Schema(msg)) => assert!(msg.contains("negative"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_offset() {
        let src = "{\"meta\": {\"agent_id\": \"a\"},\n \"events\": [ oops ]}";
        match parse_episode(src.as_bytes()) {
            Err(Error::Parse { offset, .. }) => assert_eq!(&src[offset..offset + 1], "o"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn depth_out_of_range() {
        let src = r#"{"meta":{"agent_id":"a"},"events":[{"kind":"scroll","t_ms":1,"depth_pct":140}]}"#;
        assert!(matches!(parse_episode(src.as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn extra_fields_survive_round_trip() {
        let src = r#"{"meta":{"agent_id":"a","timestamp":"2025-01-01","page_count":3},"events":[
            {"kind":"navigate","t_ms":10,"url":"https://x.org/","trigger":"popstate","frame":"main"},
            {"kind":"click","t_ms":20,"x":1.5,"y":2,"selector":{"tag":"a"}}]}"#;
        let t = parse_episode(src.as_bytes()).unwrap();
        assert_eq!(t.events()[0].extra["frame"], "main");
        let again = parse_episode(t.to_json_string().as_bytes()).unwrap();
        assert_eq!(t, again);
        assert_eq!(again.meta().extra["timestamp"], "2025-01-01");
        assert_eq!(again.meta().page_count, Some(3));
    }

    #[test]
    fn viewport_violation_is_a_warning() {
        let src = r#"{"meta":{"agent_id":"a"},"events":[{"kind":"click","t_ms":1,"x":1500,"y":10}]}"#;
        let parsed = parse_episode_with_warnings(src.as_bytes()).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
    }
}
