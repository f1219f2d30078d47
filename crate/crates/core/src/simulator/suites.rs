//! Built-in profile sets.

use super::profile::{ActionMix, AgentProfile, ClickModel, CountModel, KindTiming, LogNormal, ProfileSet, ScrollWalk};
use crate::error::{Error, Result};

pub const SUITE_NAMES: [&str; 5] = ["separable14", "timing-only", "action-only", "clone-pair", "extreme"];

/// The agent withheld in the open-set checks of the `clone-pair` and
/// `extreme` suites.
pub fn heldout_agent(suite: &str) -> Option<&'static str> {
    match suite {
        "clone-pair" => Some("agent01-clone"),
        "extreme" => Some("chimera"),
        _ => None,
    }
}

fn ln(d: f64, sigma: f64) -> LogNormal {
    LogNormal { mu: d.ln(), sigma }
}

/// Mid-range defaults shared by all suites.
fn base(agent_id: &str) -> AgentProfile {
    AgentProfile {
        agent_id: agent_id.to_string(),
        model_name: format!("sim-{agent_id}"),
        structural_key_prob: 0.25,
        popstate_prob: 0.15,
        offsite_prob: 0.1,
        textarea_prob: 0.2,
        first_action: ln(2500.0, 0.4),
        action_mix: ActionMix {
            click: 0.4,
            keydown: 0.3,
            scroll: 0.2,
            focus: 0.1,
        },
        click: ClickModel {
            x: 640.0,
            y: 380.0,
            std: 150.0,
            link_prob: 0.5,
        },
        scroll: ScrollWalk {
            step_mean: 15.0,
            step_std: 6.0,
            reversal_prob: 0.15,
        },
        pages: CountModel {
            mean: 4.0,
            dispersion: 2.0,
        },
        events: CountModel {
            mean: 100.0,
            dispersion: 3.0,
        },
        iei: KindTiming::uniform(ln(1200.0, 0.5)),
    }
}

/// Per-kind timing around a base median, with a kind-specific pattern.
fn timing(median_ms: f64, sigma: f64, keydown_factor: f64, scroll_factor: f64) -> KindTiming {
    KindTiming {
        click: ln(median_ms, sigma),
        keydown: ln(median_ms * keydown_factor, sigma),
        scroll: ln(median_ms * scroll_factor, sigma),
        focus: ln(median_ms * 0.8, sigma),
        navigate: ln(median_ms * 1.5, sigma),
        beforeunload: ln(median_ms * 0.1, 0.3),
    }
}

const MIXES: [[f64; 4]; 7] = [
    [0.55, 0.15, 0.20, 0.10],
    [0.25, 0.45, 0.15, 0.15],
    [0.30, 0.15, 0.45, 0.10],
    [0.40, 0.30, 0.10, 0.20],
    [0.35, 0.25, 0.30, 0.10],
    [0.20, 0.35, 0.25, 0.20],
    [0.45, 0.20, 0.30, 0.05],
];

fn mix(m: [f64; 4]) -> ActionMix {
    ActionMix {
        click: m[0],
        keydown: m[1],
        scroll: m[2],
        focus: m[3],
    }
}

/// Fourteen agents, each with its own timing and its own action habits.
/// Timing is the sharper of the two signals.
pub fn separable14() -> ProfileSet {
    let agents = (0..14)
        .map(|i| {
            let mut p = base(&format!("agent{:02}", i + 1));
            // timing ladder, visited out of step with the behavior patterns
            let rung = (i * 5) % 14;
            let median = 300.0 * 20f64.powf(rung as f64 / 13.0);
            let sigma = [0.25, 0.45][(i / 2) % 2];
            let keydown = [0.3, 0.6, 1.0][i % 3];
            let scroll = [0.7, 1.4][(i / 3) % 2];
            p.iei = timing(median, sigma, keydown, scroll);
            p.first_action = ln(median * 3.0, 0.3);
            p.action_mix = mix(MIXES[i % 7]);
            p.popstate_prob = [0.05, 0.4][i / 7];
            p.click.y = [150.0, 450.0][i % 2];
            p.click.x = [450.0, 830.0][(i / 3) % 2];
            p.click.std = [70.0, 180.0][(i / 6) % 2];
            p.click.link_prob = [0.05, 0.5, 0.95][(i / 2) % 3];
            p.structural_key_prob = [0.02, 0.6][(i / 4) % 2];
            p.textarea_prob = [0.1, 0.7][(i / 2) % 2];
            p.scroll.step_mean = [8.0, 20.0][(i / 5) % 2];
            p
        })
        .collect();
    ProfileSet::new(agents).expect("preset is valid")
}

/// Agents that differ only in timing; every non-timing parameter, and the
/// first-action delay, is shared.
pub fn timing_only() -> ProfileSet {
    let agents = (0..8)
        .map(|i| {
            let mut p = base(&format!("tempo{:02}", i + 1));
            let median = 400.0 * 6f64.powf(i as f64 / 7.0);
            p.iei = timing(median, [0.35, 0.6][i % 2], [0.4, 1.0][(i / 2) % 2], 1.0);
            p
        })
        .collect();
    ProfileSet::new(agents).expect("preset is valid")
}

/// Agents with one shared timing distribution for every kind, differing in
/// what they do.
pub fn action_only() -> ProfileSet {
    let agents = (0..8)
        .map(|i| {
            let mut p = base(&format!("habit{:02}", i + 1));
            p.action_mix = mix(MIXES[i % 7]);
            p.click.y = [150.0, 300.0, 450.0, 600.0][i % 4];
            p.click.std = [60.0, 200.0][(i / 4) % 2];
            p.click.link_prob = [0.1, 0.9][i % 2];
            p.structural_key_prob = [0.05, 0.6][(i / 2) % 2];
            p.scroll.step_mean = [6.0, 25.0][(i / 4) % 2];
            p.popstate_prob = [0.0, 0.5][(i / 2) % 2];
            p
        })
        .collect();
    ProfileSet::new(agents).expect("preset is valid")
}

/// Two agents that are mirror images in log-time (identical habits, every
/// delay scaled by the same factor up or down), plus an exact copy of the
/// first under a different id. The symmetry makes both known agents equally
/// hard to recognize.
pub fn clone_pair() -> ProfileSet {
    let mut agents: Vec<AgentProfile> = [800.0 / 1.1, 800.0 * 1.1]
        .iter()
        .enumerate()
        .map(|(i, &median)| {
            let mut p = base(&format!("agent{:02}", i + 1));
            p.iei = timing(median, 0.4, 0.6, 1.0);
            p.first_action = ln(median * 3.0, 0.4);
            p
        })
        .collect();
    let mut clone = agents[0].clone();
    clone.agent_id = "agent01-clone".into();
    agents.push(clone);
    ProfileSet::new(agents).expect("preset is valid")
}

/// Four `separable14` agents plus a `chimera` that has the timing of the
/// slowest of them, the action mix of another, and spatial, keyboard and
/// navigation behavior outside every known agent's range.
pub fn extreme() -> ProfileSet {
    let known: Vec<AgentProfile> = separable14().agents.into_iter().take(4).collect();
    let mut chimera = known[1].clone();
    chimera.agent_id = "chimera".into();
    chimera.model_name = "sim-chimera".into();
    chimera.iei = known[2].iei;
    chimera.first_action = known[2].first_action;
    chimera.click = ClickModel {
        x: 1150.0,
        y: 700.0,
        std: 20.0,
        link_prob: 0.0,
    };
    chimera.structural_key_prob = 0.95;
    chimera.popstate_prob = 0.9;
    chimera.scroll.step_mean = 60.0;
    chimera.pages.mean = 15.0;
    let mut agents = known;
    agents.push(chimera);
    ProfileSet::new(agents).expect("preset is valid")
}

pub fn suite(name: &str) -> Result<ProfileSet> {
    match name {
        "separable14" => Ok(separable14()),
        "timing-only" => Ok(timing_only()),
        "action-only" => Ok(action_only()),
        "clone-pair" => Ok(clone_pair()),
        "extreme" => Ok(extreme()),
        other => Err(Error::Config(format!(
            "unknown suite {other:?}; available: {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

pub fn preset_suites() -> Vec<(&'static str, ProfileSet)> {
    SUITE_NAMES.iter().map(|&n| (n, suite(n).expect("listed suites exist"))).collect()
}
