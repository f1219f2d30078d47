//! Closed-set metrics on argmax predictions.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, TrainedModel};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng;

/// `confusion[t][p]` counts rows of true class `t` predicted as `p`.
pub fn confusion_matrix(truth: &[usize], pred: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        m[t][p] += 1;
    }
    m
}

/// One-vs-rest F1 per class. A class that is neither present nor predicted
/// scores 0 and is reported in the second return value.
pub fn per_class_f1(truth: &[usize], pred: &[usize], n_classes: usize) -> (Vec<f64>, Vec<usize>) {
    let m = confusion_matrix(truth, pred, n_classes);
    let mut absent = Vec::new();
    let f1 = (0..n_classes)
        .map(|c| {
            let tp = m[c][c] as f64;
            let actual: usize = m[c].iter().sum();
            let predicted: usize = m.iter().map(|row| row[c]).sum();
            if actual + predicted == 0 {
                absent.push(c);
                return 0.0;
            }
            2.0 * tp / (actual + predicted) as f64
        })
        .collect();
    (f1, absent)
}

pub fn macro_f1(truth: &[usize], pred: &[usize], n_classes: usize) -> f64 {
    let (f1, _) = per_class_f1(truth, pred, n_classes);
    f1.iter().sum::<f64>() / n_classes as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSetReport {
    pub class_names: Vec<String>,
    pub per_class_f1: BTreeMap<String, f64>,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub n_test: usize,
    pub confusion: Vec<Vec<usize>>,
}

impl ClosedSetReport {
    pub fn from_predictions(class_names: &[String], truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Eval("empty test set".into()));
        }
        let k = class_names.len();
        let (f1, absent) = per_class_f1(truth, pred, k);
        for c in absent {
            log::warn!("class {} has no test rows and no predictions; F1 set to 0", class_names[c]);
        }
        let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
        Ok(ClosedSetReport {
            class_names: class_names.to_vec(),
            per_class_f1: class_names.iter().cloned().zip(f1.iter().copied()).collect(),
            macro_f1: f1.iter().sum::<f64>() / k as f64,
            accuracy: hits as f64 / truth.len() as f64,
            n_test: truth.len(),
            confusion: confusion_matrix(truth, pred, k),
        })
    }
}

/// Maps each test row's class onto the model's class list.
pub(crate) fn aligned_truth(model: &TrainedModel, test: &LabeledDataset) -> Result<Vec<usize>> {
    let map = test
        .class_names()
        .iter()
        .map(|name| {
            model
                .class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Eval(format!("test class {name:?} unknown to the model")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(test.labels().iter().map(|&l| map[l]).collect())
}

pub fn predict_all(model: &dyn Classifier, test: &LabeledDataset) -> Vec<usize> {
    test.rows().iter().map(|r| model.predict(r.as_slice())).collect()
}

pub fn closed_set_eval(model: &TrainedModel, test: &LabeledDataset) -> Result<ClosedSetReport> {
    let truth = aligned_truth(model, test)?;
    ClosedSetReport::from_predictions(&model.class_names, &truth, &predict_all(model, test))
}

/// Uniformly random class per row; the chance-level reference.
pub fn random_predictions(n_rows: usize, n_classes: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed, &["random-baseline"]);
    (0..n_rows).map(|_| r.random_range(0..n_classes)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_constant_predictors() {
        let truth = vec![0, 1, 2, 0, 1, 2];
        assert_eq!(macro_f1(&truth, &truth, 3), 1.0);
        let m = confusion_matrix(&truth, &[1; 6], 3);
        let nonzero_cols: Vec<usize> = (0..3).filter(|&c| m.iter().any(|r| r[c] > 0)).collect();
        assert_eq!(nonzero_cols, vec![1]);
        for (c, row) in m.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), truth.iter().filter(|&&t| t == c).count());
        }
    }

    #[test]
    fn hand_computed_f1() {
        // class 0: tp 1, fp 1, fn 1 -> 0.5; class 1: tp 1, fp 1, fn 1 -> 0.5
        let truth = [0, 0, 1, 1];
        let pred = [0, 1, 0, 1];
        let (f1, absent) = per_class_f1(&truth, &pred, 3);
        assert_eq!(f1, vec![0.5, 0.5, 0.0]);
        assert_eq!(absent, vec![2]);
    }

    #[test]
    fn random_baseline_near_one_over_k() {
        let truth: Vec<usize> = (0..1050).map(|i| i % 14).collect();
        for seed in 0..5 {
            let f = macro_f1(&truth, &random_predictions(truth.len(), 14, seed), 14);
            assert!((0.04..=0.10).contains(&f), "{f}");
        }
    }

    #[test]
    fn empty_test_set_is_an_error() {
        assert!(matches!(
            ClosedSetReport::from_predictions(&["a".into()], &[], &[]),
            Err(Error::Eval(_))
        ));
    }

    proptest! {
        #[test]
        fn macro_f1_invariant_under_relabeling(
            pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60),
            perm in Just([2usize, 0, 3, 1]),
        ) {
            let truth: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let pred: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let t2: Vec<usize> = truth.iter().map(|&c| perm[c]).collect();
            let p2: Vec<usize> = pred.iter().map(|&c| perm[c]).collect();
            prop_assert!((macro_f1(&truth, &pred, 4) - macro_f1(&t2, &p2, 4)).abs() < 1e-12);
        }
    }
}
