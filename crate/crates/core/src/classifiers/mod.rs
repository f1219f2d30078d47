//! Tabular classifiers behind a common [`Trainer`] interface.
//!
//! Each model family registers a trainer under a short name (`gbt`,
//! `forest`, `lr-l2`, `lr-l1`); experiments and the CLI look trainers up in
//! a [`Registry`] and never name a concrete family in code.

pub mod forest;
pub mod gbt;
pub mod linear;
pub mod persist;
pub mod search;
pub mod standardize;
pub mod tree;

#[cfg(test)]
pub(crate) mod testdata;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Matrix};
use crate::error::{Error, Result};

pub use forest::{ForestConfig, ForestModel, MaxFeatures};
pub use gbt::{GbtConfig, GbtModel};
pub use linear::{LinearConfig, LinearModel, Penalty};
pub use persist::{load_model, save_model};
pub use search::{cross_validated_search, SearchResult, SearchSpace, Tuning};
pub use standardize::Standardizer;

pub trait Classifier {
    fn n_classes(&self) -> usize;

    /// Class probabilities; sums to 1.
    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;

    /// Most probable class, lowest index on ties.
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba(x))
    }

    /// Feature indices the model can depend on.
    fn referenced_features(&self) -> Vec<usize>;
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Rejects datasets with fewer than two classes or a class with fewer than
/// `min_rows` rows.
pub(crate) fn check_trainable(y: &[usize], n_classes: usize, min_rows: usize) -> Result<()> {
    if n_classes < 2 {
        return Err(Error::Train(format!("need at least 2 classes, got {n_classes}")));
    }
    let mut counts = vec![0usize; n_classes];
    for &l in y {
        counts[l] += 1;
    }
    if let Some((c, &n)) = counts.iter().enumerate().find(|(_, &n)| n < min_rows) {
        return Err(Error::Train(format!(
            "class {c} has {n} rows; at least {min_rows} required"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Hyperparams {
    Gbt(GbtConfig),
    Forest(ForestConfig),
    Linear(LinearConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Gbt(GbtModel),
    Forest(ForestModel),
    Linear(LinearModel),
}

impl Model {
    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Gbt(m) => m,
            Model::Forest(m) => m,
            Model::Linear(m) => m,
        }
    }
}

impl Classifier for Model {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.inner().predict_proba(x)
    }

    fn referenced_features(&self) -> Vec<usize> {
        self.inner().referenced_features()
    }
}

/// A fitted model together with the class names and settings that produced
/// it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: String,
    pub class_names: Vec<String>,
    pub config: Hyperparams,
    pub seed: u64,
    pub model: Model,
}

impl Classifier for TrainedModel {
    fn n_classes(&self) -> usize {
        self.model.n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.model.predict_proba(x)
    }

    fn referenced_features(&self) -> Vec<usize> {
        self.model.referenced_features()
    }
}

/// One model family.
pub trait Trainer: Send + Sync {
    fn name(&self) -> &'static str;

    fn default_config(&self) -> Hyperparams;

    /// The hyperparameter configurations searched during tuning. Randomized
    /// spaces draw from `seed`.
    fn search_space(&self, seed: u64) -> SearchSpace;

    fn fit(&self, x: &Matrix, y: &[usize], n_classes: usize, config: &Hyperparams, seed: u64) -> Result<Model>;
}

fn wrong_config(trainer: &str, config: &Hyperparams) -> Error {
    Error::Config(format!("{trainer} trainer cannot use {config:?}"))
}

pub struct GbtTrainer;

impl Trainer for GbtTrainer {
    fn name(&self) -> &'static str {
        "gbt"
    }

    fn default_config(&self) -> Hyperparams {
        Hyperparams::Gbt(GbtConfig::default())
    }

    fn search_space(&self, seed: u64) -> SearchSpace {
        SearchSpace::gbt(seed)
    }

    fn fit(&self, x: &Matrix, y: &[usize], n_classes: usize, config: &Hyperparams, seed: u64) -> Result<Model> {
        match config {
            Hyperparams::Gbt(c) => Ok(Model::Gbt(gbt::fit(x, y, n_classes, c, seed)?)),
            other => Err(wrong_config(self.name(), other)),
        }
    }
}

pub struct ForestTrainer;

impl Trainer for ForestTrainer {
    fn name(&self) -> &'static str {
        "forest"
    }

    fn default_config(&self) -> Hyperparams {
        Hyperparams::Forest(ForestConfig::default())
    }

    fn search_space(&self, _seed: u64) -> SearchSpace {
        SearchSpace::forest()
    }

    fn fit(&self, x: &Matrix, y: &[usize], n_classes: usize, config: &Hyperparams, seed: u64) -> Result<Model> {
        match config {
            Hyperparams::Forest(c) => Ok(Model::Forest(forest::fit(x, y, n_classes, c, seed)?)),
            other => Err(wrong_config(self.name(), other)),
        }
    }
}

pub struct LinearTrainer {
    pub penalty: Penalty,
}

impl Trainer for LinearTrainer {
    fn name(&self) -> &'static str {
        match self.penalty {
            Penalty::L2 => "lr-l2",
            Penalty::L1 => "lr-l1",
        }
    }

    fn default_config(&self) -> Hyperparams {
        Hyperparams::Linear(LinearConfig::new(self.penalty, 1.0))
    }

    fn search_space(&self, _seed: u64) -> SearchSpace {
        SearchSpace::linear(self.penalty)
    }

    fn fit(&self, x: &Matrix, y: &[usize], n_classes: usize, config: &Hyperparams, _seed: u64) -> Result<Model> {
        match config {
            Hyperparams::Linear(c) if c.penalty == self.penalty => {
                Ok(Model::Linear(linear::fit(x, y, n_classes, c)?))
            }
            other => Err(wrong_config(self.name(), other)),
        }
    }
}

/// Trainers by name.
pub struct Registry {
    trainers: BTreeMap<&'static str, Box<dyn Trainer>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            trainers: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(GbtTrainer));
        r.register(Box::new(ForestTrainer));
        r.register(Box::new(LinearTrainer { penalty: Penalty::L2 }));
        r.register(Box::new(LinearTrainer { penalty: Penalty::L1 }));
        r
    }

    pub fn register(&mut self, trainer: Box<dyn Trainer>) {
        self.trainers.insert(trainer.name(), trainer);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Trainer> {
        self.trainers.get(name).map(|t| t.as_ref()).ok_or_else(|| {
            Error::Config(format!(
                "unknown model family {name:?}; available: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.trainers.keys().copied().collect()
    }
}

/// Fits a model on a labeled dataset with fixed or searched hyperparameters.
pub fn train(trainer: &dyn Trainer, data: &LabeledDataset, tuning: &Tuning, seed: u64) -> Result<TrainedModel> {
    let x = data.matrix();
    let (config, model) = match tuning {
        Tuning::Fixed(config) => {
            let model = trainer.fit(&x, data.labels(), data.n_classes(), config, seed)?;
            (config.clone(), model)
        }
        Tuning::Search { folds } => {
            let space = trainer.search_space(seed);
            let result = cross_validated_search(trainer, &x, data.labels(), data.n_classes(), &space, *folds, seed)?;
            (result.best_config, result.model)
        }
    };
    Ok(TrainedModel {
        family: trainer.name().to_string(),
        class_names: data.class_names().to_vec(),
        config,
        seed,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let r = Registry::builtin();
        assert_eq!(r.names(), vec!["forest", "gbt", "lr-l1", "lr-l2"]);
        assert_eq!(r.get("gbt").unwrap().name(), "gbt");
        assert!(matches!(r.get("lstm"), Err(Error::Config(_))));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.25, 0.25, 0.5]), 2);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn trainer_rejects_foreign_config() {
        let r = Registry::builtin();
        let x = Matrix::new(vec![0.0; 4], 1);
        let cfg = r.get("forest").unwrap().default_config();
        assert!(matches!(r.get("gbt").unwrap().fit(&x, &[0, 0, 1, 1], 2, &cfg, 0), Err(Error::Config(_))));
    }
}
