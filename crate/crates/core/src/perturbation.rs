//! Timing perturbations used to test how much attribution depends on when
//! events happen rather than what they are.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{train, Trainer, Tuning};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::evaluation::report::{fmt, Table, Tabulate};
use crate::evaluation::closed_set_eval;
use crate::ingest::featurize;
use crate::rng;
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayBudget {
    max_delay_ms: u64,
}

impl DelayBudget {
    pub fn new(max_delay_ms: u64) -> Result<Self> {
        if max_delay_ms == 0 {
            return Err(Error::Config("delay budget must be positive".into()));
        }
        Ok(DelayBudget { max_delay_ms })
    }

    pub fn max_delay_ms(self) -> u64 {
        self.max_delay_ms
    }
}

/// Draws one uniform integer delay in `[0, max]` before each event (the
/// first draw shifts the first action, the rest widen each gap) and
/// applies their running sum. The stream is keyed by the trace's agent and
/// episode id, so a corpus can be perturbed in any order.
pub fn inject_delays(trace: &Trace, budget: DelayBudget, seed: u64) -> Trace {
    let m = trace.meta();
    let mut r = rng::stream(seed, &["delay", &m.agent_id, &m.episode_id]);
    let mut offset = 0u64;
    let times: Vec<u64> = trace
        .events()
        .iter()
        .map(|e| {
            offset += r.random_range(0..=budget.max_delay_ms);
            e.t_ms + offset
        })
        .collect();
    trace.with_timestamps(&times)
}

pub fn inject_delays_all(traces: &[Trace], budget: DelayBudget, seed: u64) -> Vec<Trace> {
    traces.par_iter().map(|t| inject_delays(t, budget, seed)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    pub budget_ms: u64,
    pub clean_f1: f64,
    pub unadapted_f1: f64,
    pub adapted_f1: f64,
}

impl Tabulate for [DelayRow] {
    fn table(&self) -> Table {
        let mut t = Table::new(&["budget_ms", "clean_f1", "unadapted_f1", "adapted_f1"]);
        for r in self {
            t.push(vec![r.budget_ms.to_string(), fmt(r.clean_f1), fmt(r.unadapted_f1), fmt(r.adapted_f1)]);
        }
        t
    }
}

/// For each budget: a model trained on clean traces and one retrained on
/// delayed training traces, both evaluated on the same delayed test set.
/// Training and test delays come from independent streams.
pub fn delay_robustness_experiment(
    train_traces: &[Trace],
    test_traces: &[Trace],
    class_names: &[String],
    budgets: &[u64],
    trainer: &dyn Trainer,
    tuning: &Tuning,
    seed: u64,
) -> Result<Vec<DelayRow>> {
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("delay budgets must be sorted ascending".into()));
    }
    let train_set = featurize(train_traces, class_names, Split::Train)?;
    let clean_model = train(trainer, &train_set, tuning, seed)?;
    let clean_f1 = closed_set_eval(&clean_model, &featurize(test_traces, class_names, Split::Test)?)?.macro_f1;

    let mut rows = Vec::with_capacity(budgets.len());
    for &b in budgets {
        let budget = DelayBudget::new(b)?;
        let test_seed = rng::derive_seed(seed, &["delay-test", &b.to_string()]);
        let train_seed = rng::derive_seed(seed, &["delay-train", &b.to_string()]);
        let delayed_test = featurize(&inject_delays_all(test_traces, budget, test_seed), class_names, Split::Test)?;
        let delayed_train = featurize(&inject_delays_all(train_traces, budget, train_seed), class_names, Split::Train)?;
        let adapted = train(trainer, &delayed_train, tuning, seed)?;
        let row = DelayRow {
            budget_ms: b,
            clean_f1,
            unadapted_f1: closed_set_eval(&clean_model, &delayed_test)?.macro_f1,
            adapted_f1: closed_set_eval(&adapted, &delayed_test)?.macro_f1,
        };
        log::info!("delay {b} ms: unadapted {:.4}, adapted {:.4}", row.unadapted_f1, row.adapted_f1);
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{delta_ts, EpisodeMetadata, Event, EventPayload};

    fn fixture() -> Trace {
        let events = [100, 200, 400]
            .iter()
            .map(|&t| Event::new(t, EventPayload::Keydown { key: "a".into() }))
            .collect();
        Trace::new(EpisodeMetadata::new("agent", "ds", "ep0"), events).unwrap()
    }

    #[test]
    fn gaps_grow_by_their_own_draws() {
        let t = fixture();
        let budget = DelayBudget::new(50).unwrap();
        let out = inject_delays(&t, budget, 3);
        // re-derive the draws from the same stream
        let mut r = rng::stream(3, &["delay", "agent", "ep0"]);
        let d: Vec<u64> = (0..3).map(|_| r.random_range(0..=50)).collect();
        assert_eq!(out.events()[0].t_ms, 100 + d[0]);
        assert_eq!(delta_ts(&out), vec![(100 + d[1]) as f64, (200 + d[2]) as f64]);
        assert_eq!(out, inject_delays(&t, budget, 3));
    }

    #[test]
    fn payloads_and_order_survive() {
        let t = fixture();
        let out = inject_delays(&t, DelayBudget::new(5000).unwrap(), 1);
        assert_eq!(out.len(), t.len());
        for (a, b) in t.events().iter().zip(out.events()) {
            assert_eq!(a.payload, b.payload);
            assert!(b.t_ms >= a.t_ms);
        }
    }

    #[test]
    fn zero_budget_rejected() {
        assert!(DelayBudget::new(0).is_err());
    }
}
