//! Macro F1 as a function of training-set size or trace prefix length.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::closed_set_eval;
use crate::classifiers::{train, TrainedModel, Trainer, Tuning};
use crate::dataset::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::ingest::featurize;
use crate::rng;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Training fraction, or prefix length in events.
    pub x: f64,
    pub macro_f1: f64,
    pub n_train: usize,
}

fn min_rows_for(tuning: &Tuning) -> usize {
    match tuning {
        Tuning::Fixed(_) => 1,
        Tuning::Search { folds } => *folds,
    }
}

/// Row indices of a stratified subsample. Each class is shuffled once, so
/// the rows chosen for a smaller fraction are a prefix of those chosen for
/// a larger one. Indices come back ascending, so fraction 1 is the full set
/// in its original order.
pub fn nested_subsample(data: &LabeledDataset, fraction: f64, seed: u64) -> Vec<Vec<usize>> {
    (0..data.n_classes())
        .map(|c| {
            let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.labels()[i] == c).collect();
            members.shuffle(&mut rng::stream(seed, &["fraction", &c.to_string()]));
            let keep = ((fraction * members.len() as f64) + 1e-9).floor() as usize;
            members.truncate(keep);
            members
        })
        .collect()
}

pub fn training_fraction_curve(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    fractions: &[f64],
    trainer: &dyn Trainer,
    tuning: &Tuning,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if let Some(f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::Config(format!("training fraction {f} outside (0, 1]")));
    }
    let mut points = Vec::new();
    for &fraction in fractions {
        let per_class = nested_subsample(train_set, fraction, seed);
        if let Some(c) = per_class.iter().position(|m| m.len() < min_rows_for(tuning)) {
            log::warn!(
                "fraction {fraction}: class {} keeps {} rows; point skipped",
                train_set.class_names()[c],
                per_class[c].len()
            );
            continue;
        }
        let mut rows: Vec<usize> = per_class.concat();
        rows.sort_unstable();
        let subset = train_set.subset(&rows);
        let model = train(trainer, &subset, tuning, seed)?;
        points.push(CurvePoint {
            x: fraction,
            macro_f1: closed_set_eval(&model, test_set)?.macro_f1,
            n_train: subset.len(),
        });
    }
    Ok(points)
}

pub fn mean_trace_length(traces: &[Trace]) -> f64 {
    traces.iter().map(Trace::len).sum::<usize>() as f64 / traces.len().max(1) as f64
}

fn truncated_dataset(traces: &[Trace], k: usize, class_names: &[String], split: Split) -> Result<LabeledDataset> {
    let cut: Vec<Trace> = traces.iter().map(|t| t.truncated(k)).collect();
    featurize(&cut, class_names, split)
}

/// Where the prefix limit applies.
pub enum Truncation<'a> {
    /// Evaluate a fixed full-trace model on test prefixes.
    TestSide { model: &'a TrainedModel },
    /// Retrain on training prefixes, evaluate on full test traces.
    TrainSide {
        train: &'a [Trace],
        class_names: &'a [String],
        trainer: &'a dyn Trainer,
        tuning: &'a Tuning,
        seed: u64,
    },
}

pub fn truncation_curve(mode: &Truncation, test: &[Trace], ks: &[usize]) -> Result<Vec<CurvePoint>> {
    if ks.contains(&0) {
        return Err(Error::Config("prefix length k must be positive".into()));
    }
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let point = match mode {
            Truncation::TestSide { model } => {
                let ds = truncated_dataset(test, k, &model.class_names, Split::Test)?;
                CurvePoint {
                    x: k as f64,
                    macro_f1: closed_set_eval(model, &ds)?.macro_f1,
                    n_train: 0,
                }
            }
            Truncation::TrainSide { train: train_traces, class_names, trainer, tuning, seed } => {
                let train_set = truncated_dataset(train_traces, k, class_names, Split::Train)?;
                let model = train(*trainer, &train_set, tuning, *seed)?;
                let test_set = featurize(test, class_names, Split::Test)?;
                CurvePoint {
                    x: k as f64,
                    macro_f1: closed_set_eval(&model, &test_set)?.macro_f1,
                    n_train: train_set.len(),
                }
            }
        };
        points.push(point);
    }
    Ok(points)
}
