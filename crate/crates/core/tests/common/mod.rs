#![allow(dead_code)]

pub mod oracle;

use agentprint::simulator::{simulate, suites, SplitSizes};
use agentprint::trace::Trace;

/// `n` simulator traces drawn round-robin from every preset suite.
pub fn mixed_traces(n: usize, seed: u64) -> Vec<Trace> {
    let presets = suites::preset_suites();
    let per_suite = n.div_ceil(presets.len());
    let mut pools: Vec<Vec<Trace>> = presets
        .iter()
        .map(|(_, profiles)| {
            let per_agent = per_suite.div_ceil(profiles.agents.len());
            simulate(profiles, SplitSizes::new(per_agent, 0, 0), seed).unwrap().traces
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        for pool in pools.iter_mut() {
            if out.len() < n {
                if let Some(t) = pool.pop() {
                    out.push(t);
                }
            }
        }
    }
    out
}
