//! Events, episodes and their canonical JSON form.
//!
//! A [`Trace`] is one episode: metadata plus the time-ordered list of UI
//! events recorded while an agent worked on one task. Timestamps are integer
//! milliseconds relative to session start.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const VIEWPORT_WIDTH: f64 = 1280.0;
pub const VIEWPORT_HEIGHT: f64 = 768.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Click,
    Keydown,
    Scroll,
    Navigate,
    BeforeUnload,
    Focus,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::Click,
        EventKind::Keydown,
        EventKind::Scroll,
        EventKind::Navigate,
        EventKind::BeforeUnload,
        EventKind::Focus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Click => "click",
            EventKind::Keydown => "keydown",
            EventKind::Scroll => "scroll",
            EventKind::Navigate => "navigate",
            EventKind::BeforeUnload => "beforeunload",
            EventKind::Focus => "focus",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown event kind {s:?}")))
    }
}

/// What caused a navigation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NavTrigger {
    Http,
    Popstate,
    Other,
}

impl NavTrigger {
    pub fn as_str(self) -> &'static str {
        match self {
            NavTrigger::Http => "http",
            NavTrigger::Popstate => "popstate",
            NavTrigger::Other => "other",
        }
    }
}

impl FromStr for NavTrigger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "http" => Ok(NavTrigger::Http),
            "popstate" => Ok(NavTrigger::Popstate),
            "other" => Ok(NavTrigger::Other),
            _ => Err(Error::Schema(format!("unknown navigate trigger {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventPayload {
    Click { x: f64, y: f64, is_link: bool },
    Keydown { key: String },
    /// Scroll depth as a percentage of page height.
    Scroll { depth_pct: f64 },
    Navigate { url: String, trigger: NavTrigger },
    /// Scroll depth at the moment the page is left.
    BeforeUnload { depth_pct: f64 },
    /// Tag name of the focused element (`input`, `textarea`).
    Focus { target: String },
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::Click { .. } => EventKind::Click,
            EventPayload::Keydown { .. } => EventKind::Keydown,
            EventPayload::Scroll { .. } => EventKind::Scroll,
            EventPayload::Navigate { .. } => EventKind::Navigate,
            EventPayload::BeforeUnload { .. } => EventKind::BeforeUnload,
            EventPayload::Focus { .. } => EventKind::Focus,
        }
    }
}

/// One timestamped UI action. The kind is implied by the payload variant.
///
/// Fields not covered by the schema are carried in `extra` so that a parsed
/// file serializes back without losing harness-specific data.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t_ms: u64,
    pub payload: EventPayload,
    pub extra: Map<String, Value>,
}

impl Event {
    pub fn new(t_ms: u64, payload: EventPayload) -> Self {
        Event {
            t_ms,
            payload,
            extra: Map::new(),
        }
    }

    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::from(self.kind().as_str()));
        obj.insert("t_ms".into(), Value::from(self.t_ms));
        match &self.payload {
            EventPayload::Click { x, y, is_link } => {
                obj.insert("x".into(), Value::from(*x));
                obj.insert("y".into(), Value::from(*y));
                obj.insert("is_link".into(), Value::from(*is_link));
            }
            EventPayload::Keydown { key } => {
                obj.insert("key".into(), Value::from(key.as_str()));
            }
            EventPayload::Scroll { depth_pct } | EventPayload::BeforeUnload { depth_pct } => {
                obj.insert("depth_pct".into(), Value::from(*depth_pct));
            }
            EventPayload::Navigate { url, trigger } => {
                obj.insert("url".into(), Value::from(url.as_str()));
                obj.insert("trigger".into(), Value::from(trigger.as_str()));
            }
            EventPayload::Focus { target } => {
                obj.insert("target".into(), Value::from(target.as_str()));
            }
        }
        for (k, v) in &self.extra {
            obj.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Value::Object(obj)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeMetadata {
    pub agent_id: String,
    pub model_name: String,
    pub dataset: String,
    pub episode_id: String,
    pub page_count: Option<u64>,
    pub urls: Vec<String>,
    pub extra: Map<String, Value>,
}

impl EpisodeMetadata {
    pub fn new(agent_id: &str, dataset: &str, episode_id: &str) -> Self {
        EpisodeMetadata {
            agent_id: agent_id.to_string(),
            model_name: agent_id.to_string(),
            dataset: dataset.to_string(),
            episode_id: episode_id.to_string(),
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("agent_id".into(), Value::from(self.agent_id.as_str()));
        obj.insert("model_name".into(), Value::from(self.model_name.as_str()));
        obj.insert("dataset".into(), Value::from(self.dataset.as_str()));
        obj.insert("episode_id".into(), Value::from(self.episode_id.as_str()));
        if let Some(p) = self.page_count {
            obj.insert("page_count".into(), Value::from(p));
        }
        if !self.urls.is_empty() {
            obj.insert(
                "urls".into(),
                Value::Array(self.urls.iter().map(|u| Value::from(u.as_str())).collect()),
            );
        }
        for (k, v) in &self.extra {
            obj.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Value::Object(obj)
    }
}

/// An episode: metadata plus events sorted by timestamp.
///
/// Sorting is stable, so events sharing a timestamp keep their recorded order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    meta: EpisodeMetadata,
    events: Vec<Event>,
}

impl Trace {
    pub fn new(meta: EpisodeMetadata, mut events: Vec<Event>) -> Result<Self> {
        if meta.agent_id.is_empty() {
            return Err(Error::Schema("meta.agent_id must be non-empty".into()));
        }
        events.sort_by_key(|e| e.t_ms);
        Ok(Trace { meta, events })
    }

    pub fn meta(&self) -> &EpisodeMetadata {
        &self.meta
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn with_meta(mut self, meta: EpisodeMetadata) -> Self {
        self.meta = meta;
        self
    }

    /// Replaces event timestamps, keeping order. Used by perturbations, which
    /// must never reorder events.
    pub(crate) fn with_timestamps(&self, times: &[u64]) -> Self {
        debug_assert_eq!(times.len(), self.events.len());
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        let events = self
            .events
            .iter()
            .zip(times)
            .map(|(e, &t)| Event { t_ms: t, ..e.clone() })
            .collect();
        Trace {
            meta: self.meta.clone(),
            events,
        }
    }

    /// Keeps events with index < k.
    ///
    /// A recorded page count describes the whole episode, so it is dropped
    /// when events are actually removed; features then fall back to the
    /// URLs observed in the kept prefix.
    pub fn truncated(&self, k: usize) -> Self {
        if k >= self.events.len() {
            return self.clone();
        }
        let mut meta = self.meta.clone();
        meta.page_count = None;
        Trace {
            meta,
            events: self.events[..k].to_vec(),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("meta".into(), self.meta.to_json());
        obj.insert(
            "events".into(),
            Value::Array(self.events.iter().map(Event::to_json).collect()),
        );
        Value::Object(obj)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("trace JSON is always serializable")
    }
}

/// Elapsed milliseconds between consecutive events, over all kinds.
pub fn delta_ts(trace: &Trace) -> Vec<f64> {
    trace
        .events()
        .windows(2)
        .map(|w| (w[1].t_ms - w[0].t_ms) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_at(times: &[u64]) -> Trace {
        let events = times
            .iter()
            .map(|&t| Event::new(t, EventPayload::Scroll { depth_pct: 10.0 }))
            .collect();
        Trace::new(EpisodeMetadata::new("a", "d", "e"), events).unwrap()
    }

    #[test]
    fn deltas() {
        assert_eq!(delta_ts(&trace_at(&[0, 100, 350])), vec![100.0, 250.0]);
        assert!(delta_ts(&trace_at(&[42])).is_empty());
        assert!(delta_ts(&trace_at(&[])).is_empty());
        assert_eq!(delta_ts(&trace_at(&[5, 5, 7])), vec![0.0, 2.0]);
    }

    #[test]
    fn sort_is_stable_on_ties() {
        let events = vec![
            Event::new(10, EventPayload::Keydown { key: "b".into() }),
            Event::new(5, EventPayload::Keydown { key: "a".into() }),
            Event::new(10, EventPayload::Keydown { key: "c".into() }),
        ];
        let trace = Trace::new(EpisodeMetadata::new("a", "d", "e"), events).unwrap();
        let keys: Vec<_> = trace
            .events()
            .iter()
            .map(|e| match &e.payload {
                EventPayload::Keydown { key } => key.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(keys, ["a", "b", "c"]);
    }

    #[test]
    fn empty_agent_rejected() {
        let meta = EpisodeMetadata::new("", "d", "e");
        assert!(matches!(Trace::new(meta, vec![]), Err(Error::Schema(_))));
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in EventKind::ALL {
            assert_eq!(kind.as_str().parse::<EventKind>().unwrap(), kind);
        }
        assert!("mousemove".parse::<EventKind>().is_err());
    }

    #[test]
    fn truncation_drops_recorded_page_count() {
        let mut t = trace_at(&[0, 1, 2]);
        t.meta.page_count = Some(4);
        assert_eq!(t.truncated(2).meta().page_count, None);
        assert_eq!(t.truncated(3).meta().page_count, Some(4));
        assert_eq!(t.truncated(2).len(), 2);
    }
}
