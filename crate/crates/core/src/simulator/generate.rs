//! Drawing traces and whole corpora from profiles.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal as LogNormalDist, Normal, Poisson};
use rayon::prelude::*;

use super::profile::{AgentProfile, CountModel, LogNormal, ProfileSet};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::ingest::{write_trace, SplitManifest, SPLIT_MANIFEST};
use crate::rng::{self, StreamRng};
use crate::trace::{
    EpisodeMetadata, Event, EventKind, EventPayload, NavTrigger, Trace, VIEWPORT_HEIGHT, VIEWPORT_WIDTH,
};

pub const SIM_DATASET: &str = "synthetic";

const STRUCTURAL_KEYS: [&str; 9] = [
    "Enter",
    "Tab",
    "Backspace",
    "Delete",
    "Escape",
    "ArrowDown",
    "ArrowUp",
    "ArrowLeft",
    "ArrowRight",
];
const OFFSITE_HOSTS: [&str; 4] = ["search.example", "wiki.example", "news.example", "docs.example"];

fn negative_binomial(r: &mut StreamRng, c: CountModel) -> u64 {
    if c.mean <= 0.0 {
        return 0;
    }
    let lambda = Gamma::new(c.dispersion, c.mean / c.dispersion).expect("validated").sample(r);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map_or(0, |p| p.sample(r) as u64)
}

fn draw_ms(r: &mut StreamRng, d: LogNormal) -> u64 {
    LogNormalDist::new(d.mu, d.sigma).expect("validated").sample(r).round() as u64
}

fn gaussian(r: &mut StreamRng, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        mean
    } else {
        Normal::new(mean, std).expect("validated").sample(r)
    }
}

fn pick_kind(r: &mut StreamRng, profile: &AgentProfile) -> EventKind {
    let weights = profile.action_mix.weights();
    let mut u: f64 = r.random();
    for (kind, w) in weights {
        if u < w {
            return kind;
        }
        u -= w;
    }
    // rounding slack lands on the last kind with positive weight
    weights.iter().rev().find(|w| w.1 > 0.0).map_or(EventKind::Click, |w| w.0)
}

/// One episode. In-page actions are split into pages at uniformly chosen
/// cut points; each page change emits `beforeunload` (carrying the current
/// scroll depth) followed by `navigate`.
pub fn generate_trace(profile: &AgentProfile, episode_id: &str, seed: u64) -> Trace {
    let r = &mut rng::stream(seed, &["episode", &profile.agent_id, episode_id]);
    let n_actions = negative_binomial(r, profile.events).max(1) as usize;
    // longer episodes visit proportionally more pages; the population mean
    // stays at `pages.mean`
    let length_scale = n_actions as f64 / profile.events.mean;
    let extra_pages = negative_binomial(
        r,
        CountModel {
            mean: (profile.pages.mean - 1.0) * length_scale,
            dispersion: profile.pages.dispersion,
        },
    ) as usize;
    let n_pages = (1 + extra_pages).min(n_actions);
    let mut cuts: Vec<usize> = index::sample(r, n_actions - 1, n_pages - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();

    let site = format!("{episode_id}.tasks.example");
    let start = format!("https://{site}/");
    let mut history = vec![start.clone()];
    let mut fresh_pages = 0;
    let mut depth = 0.0f64;
    let mut direction = 1.0f64;
    let mut t = draw_ms(r, profile.first_action);
    let mut events = Vec::with_capacity(n_actions + 2 * cuts.len());
    let mut next_cut = cuts.iter().peekable();

    for i in 0..n_actions {
        if next_cut.peek() == Some(&&i) {
            next_cut.next();
            t += draw_ms(r, profile.iei.beforeunload);
            events.push(Event::new(t, EventPayload::BeforeUnload { depth_pct: depth }));
            t += draw_ms(r, profile.iei.navigate);
            let (url, trigger) = if history.len() > 1 && r.random_bool(profile.popstate_prob) {
                history.pop();
                (history.last().expect("non-empty").clone(), NavTrigger::Popstate)
            } else {
                fresh_pages += 1;
                let host = if r.random_bool(profile.offsite_prob) {
                    OFFSITE_HOSTS[r.random_range(0..OFFSITE_HOSTS.len())]
                } else {
                    site.as_str()
                };
                let url = format!("https://{host}/page{fresh_pages}");
                history.push(url.clone());
                (url, NavTrigger::Http)
            };
            events.push(Event::new(t, EventPayload::Navigate { url, trigger }));
            depth = 0.0;
            direction = 1.0;
        }
        let kind = pick_kind(r, profile);
        if i > 0 {
            t += draw_ms(r, profile.iei.get(kind));
        }
        let payload = match kind {
            EventKind::Click => {
                let c = profile.click;
                EventPayload::Click {
                    x: gaussian(r, c.x, c.std).round().clamp(0.0, VIEWPORT_WIDTH),
                    y: gaussian(r, c.y, c.std).round().clamp(0.0, VIEWPORT_HEIGHT),
                    is_link: r.random_bool(c.link_prob),
                }
            }
            EventKind::Keydown => {
                let key = if r.random_bool(profile.structural_key_prob) {
                    STRUCTURAL_KEYS[r.random_range(0..STRUCTURAL_KEYS.len())].to_string()
                } else {
                    char::from(b'a' + r.random_range(0..26u8)).to_string()
                };
                EventPayload::Keydown { key }
            }
            EventKind::Scroll => {
                let s = profile.scroll;
                if r.random_bool(s.reversal_prob) {
                    direction = -direction;
                }
                let step = gaussian(r, s.step_mean, s.step_std).abs();
                depth = ((depth + direction * step).clamp(0.0, 100.0) * 10.0).round() / 10.0;
                EventPayload::Scroll { depth_pct: depth }
            }
            EventKind::Focus => {
                let target = if r.random_bool(profile.textarea_prob) { "textarea" } else { "input" };
                EventPayload::Focus { target: target.into() }
            }
            EventKind::Navigate | EventKind::BeforeUnload => unreachable!("not an in-page action"),
        };
        events.push(Event::new(t, payload));
    }

    let mut meta = EpisodeMetadata::new(&profile.agent_id, SIM_DATASET, episode_id);
    meta.model_name = profile.model_name.clone();
    meta.urls = vec![start];
    Trace::new(meta, events).expect("profile ids are validated")
}

/// Episodes per agent in each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn new(train: usize, val: usize, test: usize) -> Self {
        SplitSizes { train, val, test }
    }

    pub fn total(self) -> usize {
        self.train + self.val + self.test
    }

    /// Episode ids are shared by all agents, so one manifest covers every
    /// agent: the first `train` ids are training episodes, and so on.
    pub fn manifest(self) -> BTreeMap<String, Split> {
        (0..self.total())
            .map(|i| {
                let split = if i < self.train {
                    Split::Train
                } else if i < self.train + self.val {
                    Split::Val
                } else {
                    Split::Test
                };
                (episode_id(i), split)
            })
            .collect()
    }
}

pub fn episode_id(i: usize) -> String {
    format!("ep{i:04}")
}

#[derive(Debug, Clone)]
pub struct SimulatedCorpus {
    /// Agent-major, episode order.
    pub traces: Vec<Trace>,
    pub splits: BTreeMap<String, Split>,
}

impl SimulatedCorpus {
    pub fn split(&self, split: Split) -> Vec<Trace> {
        self.traces
            .iter()
            .filter(|t| self.splits.get(&t.meta().episode_id) == Some(&split))
            .cloned()
            .collect()
    }
}

pub fn simulate(profiles: &ProfileSet, sizes: SplitSizes, seed: u64) -> Result<SimulatedCorpus> {
    profiles.validate()?;
    let jobs: Vec<(&AgentProfile, String)> = profiles
        .agents
        .iter()
        .flat_map(|p| (0..sizes.total()).map(move |i| (p, episode_id(i))))
        .collect();
    let traces = jobs.par_iter().map(|(p, ep)| generate_trace(p, ep, seed)).collect();
    Ok(SimulatedCorpus {
        traces,
        splits: sizes.manifest(),
    })
}

pub const PROFILES_FILE: &str = "profiles.toml";

/// Writes the corpus in the canonical layout with its split manifest and
/// the profiles that produced it.
pub fn generate_corpus(profiles: &ProfileSet, sizes: SplitSizes, root: &Path, seed: u64) -> Result<SimulatedCorpus> {
    let corpus = simulate(profiles, sizes, seed)?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let timestamp = format!("seed{seed}");
    corpus
        .traces
        .par_iter()
        .map(|t| write_trace(root, &timestamp, t).map(|_| ()))
        .collect::<Result<()>>()?;
    SplitManifest::new(corpus.splits.clone()).save(&root.join(SPLIT_MANIFEST))?;
    let path = root.join(PROFILES_FILE);
    fs::write(&path, profiles.to_toml()).map_err(|e| Error::io(&path, e))?;
    Ok(corpus)
}
