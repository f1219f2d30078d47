//! Agent profiles: the parameters from which one synthetic agent's traces
//! are drawn. Profile sets are stored as TOML, one `[[agent]]` table each:
//!
//! ```toml
//! [[agent]]
//! agent_id = "fast-clicker"
//! model_name = "sim"
//! structural_key_prob = 0.2
//! popstate_prob = 0.1
//! offsite_prob = 0.05
//! textarea_prob = 0.2
//! first_action = { mu = 7.0, sigma = 0.4 }
//! action_mix = { click = 0.5, keydown = 0.2, scroll = 0.2, focus = 0.1 }
//! click = { x = 640.0, y = 300.0, std = 120.0, link_prob = 0.6 }
//! scroll = { step_mean = 15.0, step_std = 5.0, reversal_prob = 0.1 }
//! pages = { mean = 3.0, dispersion = 2.0 }
//! events = { mean = 60.0, dispersion = 1.5 }
//!
//! [agent.iei]
//! click = { mu = 6.5, sigma = 0.5 }
//! keydown = { mu = 5.0, sigma = 0.4 }
//! scroll = { mu = 6.0, sigma = 0.5 }
//! focus = { mu = 6.2, sigma = 0.5 }
//! navigate = { mu = 6.8, sigma = 0.5 }
//! beforeunload = { mu = 4.0, sigma = 0.3 }
//! ```
//!
//! Lognormal parameters are in log-milliseconds.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::EventKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormal {
    pub fn mean(self) -> f64 {
        (self.mu + self.sigma * self.sigma / 2.0).exp()
    }
}

/// Gap distribution preceding an event of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindTiming {
    pub click: LogNormal,
    pub keydown: LogNormal,
    pub scroll: LogNormal,
    pub focus: LogNormal,
    pub navigate: LogNormal,
    pub beforeunload: LogNormal,
}

impl KindTiming {
    pub fn uniform(d: LogNormal) -> Self {
        KindTiming {
            click: d,
            keydown: d,
            scroll: d,
            focus: d,
            navigate: d,
            beforeunload: d,
        }
    }

    pub fn get(&self, kind: EventKind) -> LogNormal {
        match kind {
            EventKind::Click => self.click,
            EventKind::Keydown => self.keydown,
            EventKind::Scroll => self.scroll,
            EventKind::Focus => self.focus,
            EventKind::Navigate => self.navigate,
            EventKind::BeforeUnload => self.beforeunload,
        }
    }
}

/// Probabilities of the in-page actions. Navigation is driven by the page
/// count instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionMix {
    pub click: f64,
    pub keydown: f64,
    pub scroll: f64,
    pub focus: f64,
}

impl ActionMix {
    pub fn weights(&self) -> [(EventKind, f64); 4] {
        [
            (EventKind::Click, self.click),
            (EventKind::Keydown, self.keydown),
            (EventKind::Scroll, self.scroll),
            (EventKind::Focus, self.focus),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickModel {
    pub x: f64,
    pub y: f64,
    /// Isotropic Gaussian spread in pixels.
    pub std: f64,
    pub link_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrollWalk {
    pub step_mean: f64,
    pub step_std: f64,
    pub reversal_prob: f64,
}

/// Negative binomial count with the given mean; variance is
/// `mean + mean^2 / dispersion`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountModel {
    pub mean: f64,
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: String,
    #[serde(default)]
    pub model_name: String,
    pub structural_key_prob: f64,
    pub popstate_prob: f64,
    #[serde(default)]
    pub offsite_prob: f64,
    #[serde(default)]
    pub textarea_prob: f64,
    pub first_action: LogNormal,
    pub action_mix: ActionMix,
    pub click: ClickModel,
    pub scroll: ScrollWalk,
    /// Pages visited per episode, as `1 + NB(m, dispersion)` where `m` is
    /// `mean - 1` scaled by the episode's action count relative to
    /// `events.mean`.
    pub pages: CountModel,
    /// In-page actions per episode (at least 1). Each page transition adds
    /// a `beforeunload` and a `navigate` event on top.
    pub events: CountModel,
    pub iei: KindTiming,
}

fn check_prob(agent: &str, name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{agent}: {name} = {p} is not a probability")))
    }
}

impl AgentProfile {
    pub fn validate(&self) -> Result<()> {
        let id = &self.agent_id;
        if id.is_empty() {
            return Err(Error::Config("profile with empty agent_id".into()));
        }
        if id.contains(['/', '\\']) || id.starts_with('.') {
            return Err(Error::Config(format!("agent_id {id:?} is not usable as a directory name")));
        }
        for (name, p) in [
            ("structural_key_prob", self.structural_key_prob),
            ("popstate_prob", self.popstate_prob),
            ("offsite_prob", self.offsite_prob),
            ("textarea_prob", self.textarea_prob),
            ("click.link_prob", self.click.link_prob),
            ("scroll.reversal_prob", self.scroll.reversal_prob),
        ] {
            check_prob(id, name, p)?;
        }
        let weights = self.action_mix.weights();
        for (kind, w) in weights {
            check_prob(id, &format!("action_mix.{}", kind.as_str()), w)?;
        }
        let total: f64 = weights.iter().map(|w| w.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("{id}: action_mix sums to {total}, not 1")));
        }
        let mut lognormals = vec![("first_action".to_string(), self.first_action)];
        for kind in EventKind::ALL {
            lognormals.push((format!("iei.{}", kind.as_str()), self.iei.get(kind)));
        }
        for (name, d) in lognormals {
            if !(d.sigma > 0.0 && d.sigma.is_finite() && d.mu.is_finite()) {
                return Err(Error::Config(format!("{id}: {name} needs finite mu and sigma > 0")));
            }
        }
        for (name, c, min) in [("pages", self.pages, 1.0), ("events", self.events, 1.0)] {
            if !(c.mean >= min && c.dispersion > 0.0 && c.mean.is_finite()) {
                return Err(Error::Config(format!("{id}: {name} needs mean >= {min} and dispersion > 0")));
            }
        }
        for (name, v) in [
            ("click.std", self.click.std),
            ("scroll.step_mean", self.scroll.step_mean),
            ("scroll.step_std", self.scroll.step_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{id}: {name} must be non-negative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    #[serde(rename = "agent")]
    pub agents: Vec<AgentProfile>,
}

impl ProfileSet {
    pub fn new(agents: Vec<AgentProfile>) -> Result<Self> {
        let set = ProfileSet { agents };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for a in &self.agents {
            a.validate()?;
            if !seen.insert(a.agent_id.as_str()) {
                return Err(Error::Config(format!("duplicate agent_id {:?}", a.agent_id)));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: ProfileSet = toml::from_str(text).map_err(|e| Error::Config(format!("profile file: {e}")))?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profiles serialize to TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
