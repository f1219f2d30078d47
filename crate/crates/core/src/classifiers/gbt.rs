//! Multi-class gradient-boosted trees with a softmax objective.
//!
//! Each boosting round fits one regression tree per class on the
//! per-class gradient and hessian of the cross-entropy loss. Splits are
//! found by exact greedy search over presorted feature columns, one tree
//! level at a time. Leaf weights are the regularized Newton step
//! `-soft(G, alpha) / (H + lambda)` scaled by the learning rate.
//!
//! Rows whose value is missing are routed by a default direction learned
//! per split: both directions are scored and the better one is kept.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};
use super::{check_trainable, Classifier};
use crate::dataset::Matrix;
use crate::error::Result;
use crate::rng;

/// Minimum loss reduction for a split to be kept.
const MIN_SPLIT_GAIN: f64 = 1e-6;
const MIN_HESSIAN: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    #[serde(default = "default_min_child_weight")]
    pub min_child_weight: f64,
}

fn default_min_child_weight() -> f64 {
    1.0
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            n_estimators: 200,
            learning_rate: 0.1,
            max_depth: 4,
            subsample: 0.8,
            colsample_bytree: 0.8,
            reg_alpha: 0.0,
            reg_lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_features: usize,
    pub n_classes: usize,
    /// `rounds[r][k]` is the round-`r` tree for class `k`.
    pub rounds: Vec<Vec<Tree<f64>>>,
}

impl GbtModel {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_classes];
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                z[k] += *tree.leaf(x);
            }
        }
        z
    }
}

impl Classifier for GbtModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    fn referenced_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .rounds
            .iter()
            .flatten()
            .flat_map(|t| t.split_features())
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of the softmax of `logits` against `label`.
pub fn softmax_loss(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Gradient and diagonal hessian of [`softmax_loss`] with respect to the
/// logits: `p - y` and `p (1 - p)`.
pub fn softmax_grad_hess(logits: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(logits);
    let grad = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| pk - if k == label { 1.0 } else { 0.0 })
        .collect();
    let hess = p.iter().map(|&pk| (pk * (1.0 - pk)).max(MIN_HESSIAN)).collect();
    (grad, hess)
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

struct Params {
    alpha: f64,
    lambda: f64,
    min_child_weight: f64,
}

impl Params {
    fn score(&self, g: f64, h: f64) -> f64 {
        let t = soft_threshold(g, self.alpha);
        t * t / (h + self.lambda)
    }

    fn weight(&self, g: f64, h: f64) -> f64 {
        -soft_threshold(g, self.alpha) / (h + self.lambda)
    }
}

/// Column-major copy of the training matrix with per-feature row orders.
struct Columns {
    values: Vec<Vec<f64>>,
    /// Non-missing rows of each feature sorted by value, ties by row index.
    sorted: Vec<Vec<u32>>,
}

impl Columns {
    fn new(x: &Matrix) -> Self {
        let values: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
        let sorted = values
            .iter()
            .map(|col| {
                let mut rows: Vec<u32> = (0..col.len() as u32).filter(|&i| !col[i as usize].is_nan()).collect();
                rows.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                rows
            })
            .collect();
        Columns { values, sorted }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    missing_left: bool,
}

const NO_SLOT: u32 = u32::MAX;

struct SlotStats {
    g: f64,
    h: f64,
    count: usize,
}

/// Grows one regression tree on `(grad, hess)` over the rows with
/// `in_sample[i]`, considering only `features`.
fn grow_tree(
    cols: &Columns,
    grad: &[f64],
    hess: &[f64],
    in_sample: &[bool],
    features: &[usize],
    max_depth: usize,
    params: &Params,
    learning_rate: f64,
) -> Tree<f64> {
    let n = grad.len();
    // node id of every sampled row; NO_SLOT for rows outside the sample
    let mut node_of: Vec<u32> = (0..n).map(|i| if in_sample[i] { 0 } else { NO_SLOT }).collect();
    let mut nodes: Vec<Node<f64>> = vec![Node::Leaf(0.0)];
    let (mut g0, mut h0, mut c0) = (0.0, 0.0, 0usize);
    for i in (0..n).filter(|&i| in_sample[i]) {
        g0 += grad[i];
        h0 += hess[i];
        c0 += 1;
    }
    let mut stats = vec![SlotStats { g: g0, h: h0, count: c0 }];
    let mut frontier: Vec<u32> = vec![0];

    for _depth in 0..max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut slot_of = vec![NO_SLOT; nodes.len()];
        for (s, &node) in frontier.iter().enumerate() {
            slot_of[node as usize] = s as u32;
        }
        let m = frontier.len();
        let mut best: Vec<Option<Candidate>> = vec![None; m];
        let mut tot_g = vec![0.0; m];
        let mut tot_h = vec![0.0; m];
        let mut tot_c = vec![0usize; m];
        let mut acc_g = vec![0.0; m];
        let mut acc_h = vec![0.0; m];
        let mut last = vec![f64::NAN; m];

        for &f in features {
            let order = &cols.sorted[f];
            let col = &cols.values[f];
            tot_g.iter_mut().for_each(|v| *v = 0.0);
            tot_h.iter_mut().for_each(|v| *v = 0.0);
            tot_c.iter_mut().for_each(|v| *v = 0);
            for &r in order {
                let node = node_of[r as usize];
                if node == NO_SLOT || slot_of[node as usize] == NO_SLOT {
                    continue;
                }
                let s = slot_of[node as usize] as usize;
                tot_g[s] += grad[r as usize];
                tot_h[s] += hess[r as usize];
                tot_c[s] += 1;
            }
            acc_g.iter_mut().for_each(|v| *v = 0.0);
            acc_h.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = f64::NAN);

            let consider = |s: usize, gl: f64, hl: f64, threshold: f64, best: &mut Vec<Option<Candidate>>| {
                let node = &stats[frontier[s] as usize];
                let parent = params.score(node.g, node.h);
                let has_missing = node.count > tot_c[s];
                let (gm, hm) = (node.g - tot_g[s], node.h - tot_h[s]);
                let mut options = [(gl, hl, false), (gl + gm, hl + hm, true)].into_iter();
                let n_options = if has_missing { 2 } else { 1 };
                for (lg, lh, missing_left) in options.by_ref().take(n_options) {
                    let (rg, rh) = (node.g - lg, node.h - lh);
                    if lh < params.min_child_weight || rh < params.min_child_weight {
                        continue;
                    }
                    let gain = params.score(lg, lh) + params.score(rg, rh) - parent;
                    if best[s].is_none_or(|b| gain > b.gain) {
                        best[s] = Some(Candidate {
                            gain,
                            feature: f,
                            threshold,
                            missing_left,
                        });
                    }
                }
            };

            for &r in order {
                let node = node_of[r as usize];
                if node == NO_SLOT || slot_of[node as usize] == NO_SLOT {
                    continue;
                }
                let s = slot_of[node as usize] as usize;
                let v = col[r as usize];
                if !last[s].is_nan() && v > last[s] {
                    consider(s, acc_g[s], acc_h[s], midpoint(last[s], v), &mut best);
                }
                acc_g[s] += grad[r as usize];
                acc_h[s] += hess[r as usize];
                last[s] = v;
            }
            // all present values left, missing rows right
            for s in 0..m {
                if !last[s].is_nan() && stats[frontier[s] as usize].count > tot_c[s] {
                    let node = &stats[frontier[s] as usize];
                    let (lg, lh) = (tot_g[s], tot_h[s]);
                    let (rg, rh) = (node.g - lg, node.h - lh);
                    if lh >= params.min_child_weight && rh >= params.min_child_weight {
                        let gain = params.score(lg, lh) + params.score(rg, rh) - params.score(node.g, node.h);
                        if best[s].is_none_or(|b| gain > b.gain) {
                            best[s] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold: last[s],
                                missing_left: false,
                            });
                        }
                    }
                }
            }
        }

        let mut next = Vec::new();
        let mut split_of: Vec<Option<(Candidate, u32, u32)>> = vec![None; m];
        for s in 0..m {
            let Some(c) = best[s] else { continue };
            if c.gain <= MIN_SPLIT_GAIN {
                continue;
            }
            let left = nodes.len() as u32;
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            stats.push(SlotStats { g: 0.0, h: 0.0, count: 0 });
            stats.push(SlotStats { g: 0.0, h: 0.0, count: 0 });
            nodes[frontier[s] as usize] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                missing_left: c.missing_left,
                left,
                right: left + 1,
            };
            split_of[s] = Some((c, left, left + 1));
            next.push(left);
            next.push(left + 1);
        }
        for i in 0..n {
            let node = node_of[i];
            if node == NO_SLOT || (node as usize) >= slot_of.len() || slot_of[node as usize] == NO_SLOT {
                continue;
            }
            let Some((c, left, right)) = split_of[slot_of[node as usize] as usize] else {
                continue;
            };
            let v = cols.values[c.feature][i];
            let go_left = if v.is_nan() { c.missing_left } else { v <= c.threshold };
            let child = if go_left { left } else { right };
            node_of[i] = child;
            let st = &mut stats[child as usize];
            st.g += grad[i];
            st.h += hess[i];
            st.count += 1;
        }
        frontier = next;
    }

    for (node, st) in nodes.iter_mut().zip(&stats) {
        if let Node::Leaf(w) = node {
            *w = params.weight(st.g, st.h) * learning_rate;
        }
    }
    Tree { nodes }
}

pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &GbtConfig, seed: u64) -> Result<GbtModel> {
    check_trainable(y, n_classes, 2)?;
    let n = x.n_rows();
    let n_features = x.n_cols();
    let k = n_classes;
    let cols = Columns::new(x);
    let params = Params {
        alpha: cfg.reg_alpha,
        lambda: cfg.reg_lambda,
        min_child_weight: cfg.min_child_weight,
    };
    let n_cols_per_tree = ((cfg.colsample_bytree * n_features as f64).floor() as usize).clamp(1, n_features);
    let mut rng = rng::stream(seed, &["gbt"]);

    let mut logits = vec![0.0; n * k];
    let mut grad = vec![vec![0.0; n]; k];
    let mut hess = vec![vec![0.0; n]; k];
    let mut in_sample = vec![true; n];
    let mut rounds = Vec::with_capacity(cfg.n_estimators);

    for _ in 0..cfg.n_estimators {
        for i in 0..n {
            let (g, h) = softmax_grad_hess(&logits[i * k..(i + 1) * k], y[i]);
            for c in 0..k {
                grad[c][i] = g[c];
                hess[c][i] = h[c];
            }
        }
        if cfg.subsample < 1.0 {
            for s in in_sample.iter_mut() {
                *s = rng.random::<f64>() < cfg.subsample;
            }
        }
        let mut round = Vec::with_capacity(k);
        for c in 0..k {
            let mut features = if n_cols_per_tree == n_features {
                (0..n_features).collect::<Vec<_>>()
            } else {
                index::sample(&mut rng, n_features, n_cols_per_tree).into_vec()
            };
            features.sort_unstable();
            let tree = grow_tree(
                &cols,
                &grad[c],
                &hess[c],
                &in_sample,
                &features,
                cfg.max_depth,
                &params,
                cfg.learning_rate,
            );
            for i in 0..n {
                logits[i * k + c] += *tree.leaf(x.row(i));
            }
            round.push(tree);
        }
        rounds.push(round);
    }
    Ok(GbtModel {
        n_features,
        n_classes,
        rounds,
    })
}
