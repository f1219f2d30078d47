//! Random forest of Gini CART trees grown on bootstrap samples.
//!
//! Every split draws features in random order and evaluates them until
//! `max_features` non-constant candidates have been tried. Leaves hold
//! class frequencies; the forest averages them across trees.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};
use super::{check_trainable, Classifier};
use crate::dataset::Matrix;
use crate::error::Result;
use crate::rng;

/// Depth used for "unlimited".
pub const UNLIMITED_DEPTH: usize = (1 << 31) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        let n = n_features as f64;
        let k = match self {
            MaxFeatures::Sqrt => n.sqrt().floor(),
            MaxFeatures::Log2 => n.log2().floor(),
            MaxFeatures::Fraction(f) => (f * n).floor(),
        };
        (k as usize).clamp(1, n_features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
}

impl ForestConfig {
    pub fn depth_limit(&self) -> usize {
        self.max_depth.unwrap_or(UNLIMITED_DEPTH)
    }
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 200,
            max_depth: None,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub n_classes: usize,
    pub trees: Vec<Tree<Vec<f64>>>,
}

impl Classifier for ForestModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (acc, v) in p.iter_mut().zip(t.leaf(x)) {
                *acc += v;
            }
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }

    fn referenced_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.trees.iter().flat_map(|t| t.split_features()).collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

fn gini_weighted(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    // n * gini
    n - sum_sq / n
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    missing_left: bool,
    impurity: f64,
}

struct Builder<'a, R: Rng> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    mtry: usize,
    cfg: &'a ForestConfig,
    rng: R,
    nodes: Vec<Node<Vec<f64>>>,
}

impl<R: Rng> Builder<'_, R> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    fn best_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<SplitChoice> {
        let n_features = self.x.n_cols();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(&mut self.rng);
        let mut best: Option<SplitChoice> = None;
        let mut tried = 0;
        let mut present: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for f in order {
            if tried >= self.mtry {
                break;
            }
            present.clear();
            let mut missing = vec![0usize; self.n_classes];
            for &r in rows {
                let v = self.x.get(r, f);
                if v.is_nan() {
                    missing[self.y[r]] += 1;
                } else {
                    present.push((v, self.y[r]));
                }
            }
            let n_missing = rows.len() - present.len();
            present.sort_by(|a, b| a.0.total_cmp(&b.0));
            let constant = present.first().map(|p| p.0) == present.last().map(|p| p.0);
            if constant && n_missing == 0 {
                continue;
            }
            tried += 1;

            let mut left = vec![0usize; self.n_classes];
            let mut right: Vec<usize> = counts.iter().zip(&missing).map(|(c, m)| c - m).collect();
            let consider = |left: &[usize], right: &[usize], n_left: usize, threshold: f64, best: &mut Option<SplitChoice>| {
                let n_right_present = present.len() - n_left;
                let options: &[bool] = if n_missing > 0 { &[false, true] } else { &[false] };
                for &missing_left in options {
                    let (nl, nr, imp) = if missing_left {
                        let l: Vec<usize> = left.iter().zip(&missing).map(|(a, b)| a + b).collect();
                        (n_left + n_missing, n_right_present, gini_weighted(&l, n_left + n_missing) + gini_weighted(right, n_right_present))
                    } else {
                        let r: Vec<usize> = right.iter().zip(&missing).map(|(a, b)| a + b).collect();
                        (n_left, n_right_present + n_missing, gini_weighted(left, n_left) + gini_weighted(&r, n_right_present + n_missing))
                    };
                    if nl == 0 || nr == 0 {
                        continue;
                    }
                    if best.as_ref().is_none_or(|b| imp < b.impurity) {
                        *best = Some(SplitChoice { feature: f, threshold, missing_left, impurity: imp });
                    }
                }
            };
            for i in 0..present.len() {
                if i > 0 && present[i].0 > present[i - 1].0 {
                    consider(&left, &right, i, midpoint(present[i - 1].0, present[i].0), &mut best);
                }
                left[present[i].1] += 1;
                right[present[i].1] -= 1;
            }
            if n_missing > 0 && !present.is_empty() {
                // every present value left, missing right
                let thr = present.last().unwrap().0;
                let imp = gini_weighted(&left, present.len()) + gini_weighted(&missing, n_missing);
                if best.as_ref().is_none_or(|b| imp < b.impurity) {
                    best = Some(SplitChoice { feature: f, threshold: thr, missing_left: false, impurity: imp });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>) -> Tree<Vec<f64>> {
        // (node index, rows, depth)
        let mut stack = vec![(0usize, rows, 0usize)];
        self.nodes.push(Node::Leaf(Vec::new()));
        while let Some((idx, rows, depth)) = stack.pop() {
            let counts = self.counts(&rows);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || depth >= self.cfg.depth_limit() || rows.len() < self.cfg.min_samples_split {
                None
            } else {
                self.best_split(&rows, &counts)
            };
            match split {
                None => {
                    let n = rows.len() as f64;
                    self.nodes[idx] = Node::Leaf(counts.iter().map(|&c| c as f64 / n).collect());
                }
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&row| {
                        let v = self.x.get(row, s.feature);
                        if v.is_nan() {
                            s.missing_left
                        } else {
                            v <= s.threshold
                        }
                    });
                    let left = self.nodes.len();
                    self.nodes.push(Node::Leaf(Vec::new()));
                    self.nodes.push(Node::Leaf(Vec::new()));
                    self.nodes[idx] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        missing_left: s.missing_left,
                        left: left as u32,
                        right: left as u32 + 1,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree {
            nodes: std::mem::take(&mut self.nodes),
        }
    }
}

/// Grows one unbagged CART tree on the given rows.
pub(crate) fn grow_cart(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: Vec<usize>,
    cfg: &ForestConfig,
    seed: u64,
) -> Tree<Vec<f64>> {
    let mut b = Builder {
        x,
        y,
        n_classes,
        mtry: cfg.max_features.count(x.n_cols()),
        cfg,
        rng: rng::stream(seed, &["cart"]),
        nodes: Vec::new(),
    };
    b.grow(rows)
}

pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &ForestConfig, seed: u64) -> Result<ForestModel> {
    check_trainable(y, n_classes, 2)?;
    let n = x.n_rows();
    let trees = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            let tree_seed = rng::derive_seed(seed, &["forest", &t.to_string()]);
            let mut boot_rng = rng::stream(tree_seed, &["bootstrap"]);
            let rows: Vec<usize> = (0..n).map(|_| boot_rng.random_range(0..n)).collect();
            grow_cart(x, y, n_classes, rows, cfg, tree_seed)
        })
        .collect();
    Ok(ForestModel {
        n_features: x.n_cols(),
        n_classes,
        trees,
    })
}
