//! Leave-one-agent-out open-set evaluation.
//!
//! The classifier is trained without one agent. The held-out agent's traces
//! should look unfamiliar, which is measured by how well the unknown score
//! `1 - max class probability` ranks them above the known agents' test rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::auroc::auroc;
use crate::classifiers::{train, Classifier, Trainer, Tuning};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng;

pub fn unknown_score(model: &dyn Classifier, x: &[f64]) -> f64 {
    1.0 - model.predict_proba(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooOutcome {
    pub heldout: String,
    pub auroc: f64,
    pub n_known: usize,
    pub n_unknown: usize,
}

pub fn open_set_loo(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    heldout: &str,
    trainer: &dyn Trainer,
    tuning: &Tuning,
    seed: u64,
) -> Result<LooOutcome> {
    for ds in [train_set, test_set] {
        if ds.class_index(heldout).is_none() {
            return Err(Error::Config(format!(
                "held-out agent {heldout:?} not in the {} split",
                ds.split().as_str()
            )));
        }
    }
    let known: Vec<String> = train_set.class_names().iter().filter(|c| *c != heldout).cloned().collect();
    let only_heldout = [heldout.to_string()];
    let model = train(trainer, &train_set.restrict_to(&known), tuning, rng::derive_seed(seed, &["loo", heldout]))?;

    let score = |ds: &LabeledDataset| -> Vec<f64> {
        ds.rows().iter().map(|r| unknown_score(&model, r.as_slice())).collect()
    };
    let known_scores = score(&test_set.restrict_to(&known));
    let mut unknown_scores = score(&train_set.restrict_to(&only_heldout));
    unknown_scores.extend(score(&test_set.restrict_to(&only_heldout)));
    Ok(LooOutcome {
        heldout: heldout.to_string(),
        auroc: auroc(&unknown_scores, &known_scores)?,
        n_known: known_scores.len(),
        n_unknown: unknown_scores.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSetReport {
    pub per_heldout_auroc: BTreeMap<String, f64>,
    pub mean_auroc: f64,
    pub runs: Vec<LooOutcome>,
}

impl OpenSetReport {
    pub fn from_runs(runs: Vec<LooOutcome>) -> Self {
        let per_heldout_auroc: BTreeMap<String, f64> = runs.iter().map(|r| (r.heldout.clone(), r.auroc)).collect();
        let mean_auroc = per_heldout_auroc.values().sum::<f64>() / per_heldout_auroc.len().max(1) as f64;
        OpenSetReport {
            per_heldout_auroc,
            mean_auroc,
            runs,
        }
    }
}

/// Runs the protocol for each named agent, or for every agent when `heldout`
/// is empty.
pub fn open_set_eval(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    heldout: &[String],
    trainer: &dyn Trainer,
    tuning: &Tuning,
    seed: u64,
) -> Result<OpenSetReport> {
    let agents = if heldout.is_empty() { train_set.class_names().to_vec() } else { heldout.to_vec() };
    let runs = agents
        .iter()
        .map(|a| open_set_loo(train_set, test_set, a, trainer, tuning, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(OpenSetReport::from_runs(runs))
}
