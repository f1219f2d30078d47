//! Permutation importance: the drop in macro F1 when one feature column is
//! shuffled across the evaluation rows.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{aligned_truth, macro_f1};
use crate::classifiers::{Classifier, TrainedModel};
use crate::dataset::{FeatureVector, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::{feature_family, FeatureFamily, FEATURE_NAMES, N_FEATURES};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub family: FeatureFamily,
    pub mean_drop: f64,
    pub std_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_macro_f1: f64,
    pub repeats: usize,
    /// Catalog order.
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    /// Features by decreasing mean drop; catalog order breaks ties.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop));
        v
    }
}

pub fn permutation_importance(
    model: &TrainedModel,
    test: &LabeledDataset,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    if test.is_empty() {
        return Err(Error::Eval("empty evaluation set".into()));
    }
    let truth = aligned_truth(model, test)?;
    let k = model.class_names.len();
    let score = |rows: &[FeatureVector]| {
        let pred: Vec<usize> = rows.iter().map(|r| model.predict(r.as_slice())).collect();
        macro_f1(&truth, &pred, k)
    };
    let baseline = score(test.rows());
    let referenced = model.referenced_features();

    let features = (0..N_FEATURES)
        .into_par_iter()
        .map(|j| {
            // an unreferenced column cannot move any prediction
            let drops: Vec<f64> = if !referenced.contains(&j) {
                vec![0.0; repeats]
            } else {
                (0..repeats)
                    .map(|r| {
                        let mut column: Vec<f64> = test.rows().iter().map(|row| row.0[j]).collect();
                        column.shuffle(&mut rng::stream(seed, &["importance", FEATURE_NAMES[j], &r.to_string()]));
                        let mut rows = test.rows().to_vec();
                        for (row, v) in rows.iter_mut().zip(column) {
                            row.0[j] = v;
                        }
                        baseline - score(&rows)
                    })
                    .collect()
            };
            let n = repeats as f64;
            let mean = drops.iter().sum::<f64>() / n;
            let var = drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
            FeatureImportance {
                feature: FEATURE_NAMES[j].to_string(),
                family: feature_family(j),
                mean_drop: mean,
                std_drop: var.sqrt(),
            }
        })
        .collect();
    Ok(ImportanceReport {
        baseline_macro_f1: baseline,
        repeats,
        features,
    })
}
