//! Hyperparameter search by stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, ForestConfig, GbtConfig, Hyperparams, LinearConfig, MaxFeatures, Model, Penalty, Trainer};
use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::rng;

/// Number of randomized draws in the boosted-tree space.
pub const GBT_DRAWS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub configs: Vec<Hyperparams>,
}

impl SearchSpace {
    /// Randomized search: distinct draws from the boosted-tree grid.
    pub fn gbt(seed: u64) -> Self {
        let mut rng = rng::stream(seed, &["search", "gbt"]);
        let mut configs: Vec<Hyperparams> = Vec::with_capacity(GBT_DRAWS);
        fn pick<T: Copy>(rng: &mut impl Rng, v: &[T]) -> T {
            v[rng.random_range(0..v.len())]
        }
        while configs.len() < GBT_DRAWS {
            let cfg = Hyperparams::Gbt(GbtConfig {
                n_estimators: pick(&mut rng, &[100, 200, 300, 400, 500]),
                learning_rate: pick(&mut rng, &[0.01, 0.05, 0.1, 0.2, 0.3]),
                max_depth: pick(&mut rng, &[3, 4, 5, 6, 7, 8]),
                subsample: pick(&mut rng, &[0.6, 0.7, 0.8, 0.9, 1.0]),
                colsample_bytree: pick(&mut rng, &[0.5, 0.6, 0.7, 0.8, 1.0]),
                reg_alpha: pick(&mut rng, &[0.0, 0.01, 0.1, 1.0]),
                reg_lambda: pick(&mut rng, &[0.5, 1.0, 2.0, 5.0]),
                min_child_weight: 1.0,
            });
            if !configs.contains(&cfg) {
                configs.push(cfg);
            }
        }
        SearchSpace { configs }
    }

    /// Full grid, 36 configurations.
    pub fn forest() -> Self {
        let mut configs = Vec::new();
        for n_estimators in [200, 400] {
            for max_depth in [None, Some(15), Some(30)] {
                for max_features in [MaxFeatures::Sqrt, MaxFeatures::Log2, MaxFeatures::Fraction(0.4)] {
                    for min_samples_split in [2, 5] {
                        configs.push(Hyperparams::Forest(ForestConfig {
                            n_estimators,
                            max_depth,
                            max_features,
                            min_samples_split,
                        }));
                    }
                }
            }
        }
        SearchSpace { configs }
    }

    pub fn linear(penalty: Penalty) -> Self {
        SearchSpace {
            configs: [0.01, 0.1, 1.0, 10.0]
                .into_iter()
                .map(|c| Hyperparams::Linear(LinearConfig::new(penalty, c)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tuning {
    Fixed(Hyperparams),
    Search { folds: usize },
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_index: usize,
    pub best_config: Hyperparams,
    /// Mean fold accuracy per configuration, in enumeration order.
    pub cv_scores: Vec<f64>,
    pub n_fits: usize,
    pub model: Model,
}

/// Fold index per row. Each class is shuffled and dealt round-robin, so
/// every fold receives `floor` or `ceil` of the class's rows / folds.
pub fn stratified_folds(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let mut assignment = vec![0; y.len()];
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.len() < folds {
            return Err(Error::Train(format!(
                "class {class} has {} rows; {folds}-fold search needs at least {folds}",
                members.len()
            )));
        }
        members.shuffle(&mut rng::stream(seed, &["folds", &class.to_string()]));
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Scores every configuration by mean held-out fold accuracy, picks the best
/// (first enumerated on ties) and refits it on all rows.
pub fn cross_validated_search(
    trainer: &dyn Trainer,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    space: &SearchSpace,
    folds: usize,
    seed: u64,
) -> Result<SearchResult> {
    if space.is_empty() {
        return Err(Error::Config("empty search space".into()));
    }
    let assignment = stratified_folds(y, n_classes, folds, seed)?;
    let jobs: Vec<(usize, usize)> = (0..space.len()).flat_map(|c| (0..folds).map(move |f| (c, f))).collect();
    let accuracies = jobs
        .par_iter()
        .map(|&(c, f)| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != f).collect();
            let held: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == f).collect();
            let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let fold_seed = rng::derive_seed(seed, &["cv", &c.to_string(), &f.to_string()]);
            let model = trainer.fit(&x.select_rows(&train), &ty, n_classes, &space.configs[c], fold_seed)?;
            let hits = held.iter().filter(|&&i| model.predict(x.row(i)) == y[i]).count();
            Ok(hits as f64 / held.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let cv_scores: Vec<f64> = accuracies.chunks(folds).map(|c| c.iter().sum::<f64>() / folds as f64).collect();
    let mut best_index = 0;
    for (i, &s) in cv_scores.iter().enumerate() {
        if s > cv_scores[best_index] {
            best_index = i;
        }
    }
    log::info!(
        "{}: best of {} configs is #{best_index} (cv accuracy {:.4})",
        trainer.name(),
        space.len(),
        cv_scores[best_index]
    );
    let best_config = space.configs[best_index].clone();
    let model = trainer.fit(x, y, n_classes, &best_config, rng::derive_seed(seed, &["refit"]))?;
    Ok(SearchResult {
        best_index,
        best_config,
        cv_scores,
        n_fits: jobs.len(),
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata::blobs;
    use crate::classifiers::{ForestTrainer, GbtTrainer, LinearTrainer};
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Delegates to a real trainer while counting fits.
    struct Counting<'a> {
        inner: &'a dyn Trainer,
        fits: AtomicUsize,
    }

    impl Trainer for Counting<'_> {
        fn name(&self) -> &'static str {
            self.inner.name()
        }
        fn default_config(&self) -> Hyperparams {
            self.inner.default_config()
        }
        fn search_space(&self, seed: u64) -> SearchSpace {
            self.inner.search_space(seed)
        }
        fn fit(&self, x: &Matrix, y: &[usize], n: usize, c: &Hyperparams, s: u64) -> Result<Model> {
            self.fits.fetch_add(1, Ordering::SeqCst);
            let cheap = match c {
                Hyperparams::Forest(f) => Hyperparams::Forest(ForestConfig { n_estimators: 3, ..f.clone() }),
                Hyperparams::Gbt(g) => Hyperparams::Gbt(GbtConfig { n_estimators: 2, ..g.clone() }),
                other => other.clone(),
            };
            self.inner.fit(x, y, n, &cheap, s)
        }
    }

    #[test]
    fn space_sizes() {
        assert_eq!(SearchSpace::forest().len(), 36);
        assert_eq!(SearchSpace::gbt(3).len(), 40);
        assert_eq!(SearchSpace::linear(Penalty::L1).len(), 4);
        assert_eq!(SearchSpace::gbt(3), SearchSpace::gbt(3));
        assert_ne!(SearchSpace::gbt(3), SearchSpace::gbt(4));
    }

    #[test]
    fn fit_counts_match_space_times_folds() {
        let (x, y) = blobs(30, 3, 4, 1);
        for (trainer, expected) in [(&ForestTrainer as &dyn Trainer, 108), (&GbtTrainer, 120)] {
            let counting = Counting { inner: trainer, fits: AtomicUsize::new(0) };
            let space = counting.search_space(5);
            let r = cross_validated_search(&counting, &x, &y, 3, &space, 3, 5).unwrap();
            assert_eq!(r.n_fits, expected);
            // plus the final refit
            assert_eq!(counting.fits.load(Ordering::SeqCst), expected + 1);
        }
    }

    #[test]
    fn ties_pick_first_config() {
        let (x, y) = blobs(60, 2, 3, 8);
        let space = SearchSpace::linear(Penalty::L2);
        let trainer = LinearTrainer { penalty: Penalty::L2 };
        let a = cross_validated_search(&trainer, &x, &y, 2, &space, 3, 1).unwrap();
        assert!(a.cv_scores.iter().all(|&s| s == 1.0));
        assert_eq!(a.best_index, 0);
        let b = cross_validated_search(&trainer, &x, &y, 2, &space, 3, 1).unwrap();
        assert_eq!(a.best_config, b.best_config);
    }

    #[test]
    fn folds_are_stratified() {
        let y: Vec<usize> = (0..31).map(|i| i % 3).collect();
        let a = stratified_folds(&y, 3, 3, 2).unwrap();
        for class in 0..3 {
            let mut per = [0; 3];
            for i in 0..y.len() {
                if y[i] == class {
                    per[a[i]] += 1;
                }
            }
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
        assert_eq!(a, stratified_folds(&y, 3, 3, 2).unwrap());
    }

    #[test]
    fn small_class_is_rejected() {
        assert!(matches!(stratified_folds(&[0, 0, 0, 1, 1], 2, 3, 0), Err(Error::Train(_))));
    }
}
