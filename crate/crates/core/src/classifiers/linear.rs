//! Multinomial logistic regression with an L2 or L1 penalty.
//!
//! Minimizes `sum_i CE(softmax(W x_i + b), y_i) + R(W) / C` where
//! `R = ||W||^2 / 2` (L2) or `||W||_1` (L1); intercepts are not penalized.
//! The optimizer is accelerated proximal gradient with backtracking and
//! function-value restarts; the L1 proximal step produces exact zeros.

use serde::{Deserialize, Serialize};

use super::gbt::softmax;
use super::standardize::Standardizer;
use super::{check_trainable, Classifier};
use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub penalty: Penalty,
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl LinearConfig {
    pub fn new(penalty: Penalty, c: f64) -> Self {
        LinearConfig {
            penalty,
            c,
            max_iter: 5000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub standardizer: Standardizer,
    pub n_classes: usize,
    pub n_features: usize,
    /// Row-major `n_classes x n_features`.
    pub coef: Vec<f64>,
    pub intercept: Vec<f64>,
    pub iterations: usize,
}

impl LinearModel {
    pub fn decision(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|k| {
                let w = &self.coef[k * self.n_features..(k + 1) * self.n_features];
                self.intercept[k] + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

impl Classifier for LinearModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.decision(&self.standardizer.transform_row(x)))
    }

    fn referenced_features(&self) -> Vec<usize> {
        (0..self.n_features)
            .filter(|&j| (0..self.n_classes).any(|k| self.coef[k * self.n_features + j] != 0.0))
            .collect()
    }
}

struct Problem<'a> {
    z: &'a Matrix,
    y: &'a [usize],
    k: usize,
    d: usize,
}

impl Problem<'_> {
    /// Loss and gradient at `params` = coef (k*d) followed by intercepts (k).
    fn loss_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let (k, d) = (self.k, self.d);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut logits = vec![0.0; k];
        for (i, row) in self.z.rows().enumerate() {
            for c in 0..k {
                let w = &params[c * d..(c + 1) * d];
                logits[c] = params[k * d + c] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logits.iter().map(|v| (v - max).exp()).sum();
            loss += max + sum.ln() - logits[self.y[i]];
            for c in 0..k {
                let r = (logits[c] - max).exp() / sum - if c == self.y[i] { 1.0 } else { 0.0 };
                if r != 0.0 {
                    let g = &mut grad[c * d..(c + 1) * d];
                    for (gj, xj) in g.iter_mut().zip(row) {
                        *gj += r * xj;
                    }
                    grad[k * d + c] += r;
                }
            }
        }
        loss
    }

    fn loss(&self, params: &[f64]) -> f64 {
        let mut scratch = vec![0.0; params.len()];
        self.loss_grad(params, &mut scratch)
    }
}

fn penalty_value(cfg: &LinearConfig, coef: &[f64]) -> f64 {
    match cfg.penalty {
        Penalty::L2 => 0.5 * coef.iter().map(|w| w * w).sum::<f64>() / cfg.c,
        Penalty::L1 => coef.iter().map(|w| w.abs()).sum::<f64>() / cfg.c,
    }
}

/// Proximal map of `step * R / C` applied to the coefficient block.
fn prox(cfg: &LinearConfig, coef: &mut [f64], step: f64) {
    let t = step / cfg.c;
    match cfg.penalty {
        Penalty::L2 => coef.iter_mut().for_each(|w| *w /= 1.0 + t),
        Penalty::L1 => coef.iter_mut().for_each(|w| {
            *w = if *w > t {
                *w - t
            } else if *w < -t {
                *w + t
            } else {
                0.0
            }
        }),
    }
}

pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &LinearConfig) -> Result<LinearModel> {
    check_trainable(y, n_classes, 1)?;
    if !(cfg.c > 0.0) {
        return Err(Error::Config(format!("C must be positive, got {}", cfg.c)));
    }
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    for j in 0..z.n_cols() {
        if z.column(j).iter().any(|v| !v.is_finite()) {
            let name = FEATURE_NAMES.get(j).copied().unwrap_or("?");
            return Err(Error::Train(format!("feature {j} ({name}) is not finite after standardization")));
        }
    }
    let (k, d) = (n_classes, x.n_cols());
    let problem = Problem { z: &z, y, k, d };
    let n_params = k * d + k;
    let objective = |p: &[f64]| problem.loss(p) + penalty_value(cfg, &p[..k * d]);

    let mut current = vec![0.0; n_params];
    let mut momentum = current.clone();
    let mut grad = vec![0.0; n_params];
    let mut t = 1.0f64;
    let mut lipschitz = 1.0f64;
    let mut f_current = objective(&current);
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let f_m = problem.loss_grad(&momentum, &mut grad);
        let mut candidate;
        loop {
            let step = 1.0 / lipschitz;
            candidate = momentum.iter().zip(&grad).map(|(p, g)| p - step * g).collect::<Vec<_>>();
            prox(cfg, &mut candidate[..k * d], step);
            let diff: Vec<f64> = candidate.iter().zip(&momentum).map(|(a, b)| a - b).collect();
            let lin: f64 = diff.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let quad: f64 = diff.iter().map(|v| v * v).sum::<f64>() * lipschitz / 2.0;
            if problem.loss(&candidate) <= f_m + lin + quad + 1e-12 * f_m.abs() {
                break;
            }
            lipschitz *= 2.0;
        }
        let f_candidate = objective(&candidate);
        let max_change = candidate
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = candidate.iter().map(|v| v.abs()).fold(1.0, f64::max);

        if f_candidate > f_current {
            // restart acceleration from the last accepted point
            t = 1.0;
            momentum = current.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        momentum = candidate
            .iter()
            .zip(&current)
            .map(|(c, p)| c + (t - 1.0) / t_next * (c - p))
            .collect();
        t = t_next;
        current = candidate;
        f_current = f_candidate;
        lipschitz *= 0.9;
        if max_change <= cfg.tol * scale {
            break;
        }
    }

    Ok(LinearModel {
        standardizer,
        n_classes: k,
        n_features: d,
        coef: current[..k * d].to_vec(),
        intercept: current[k * d..].to_vec(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata::blobs;

    fn accuracy(m: &LinearModel, x: &Matrix, y: &[usize]) -> f64 {
        (0..x.n_rows()).filter(|&i| m.predict(x.row(i)) == y[i]).count() as f64 / y.len() as f64
    }

    #[test]
    fn separable_two_class_large_c() {
        let (x, y) = blobs(100, 2, 5, 21);
        let m = fit(&x, &y, 2, &LinearConfig::new(Penalty::L2, 1e6)).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn l1_is_sparse_at_small_c() {
        let (x, y) = blobs(300, 3, 41, 11);
        let m = fit(&x, &y, 3, &LinearConfig::new(Penalty::L1, 0.01)).unwrap();
        let zeros = m.coef.iter().filter(|&&w| w == 0.0).count();
        assert!(zeros * 2 >= m.coef.len(), "{zeros} of {}", m.coef.len());
    }

    #[test]
    fn two_class_softmax_matches_sigmoid() {
        let (x, y) = blobs(80, 2, 4, 2);
        let m = fit(&x, &y, 2, &LinearConfig::new(Penalty::L2, 1.0)).unwrap();
        for i in 0..x.n_rows() {
            let z = m.standardizer.transform_row(x.row(i));
            let s = m.decision(&z);
            let sigmoid = 1.0 / (1.0 + (-(s[1] - s[0])).exp());
            assert!((m.predict_proba(x.row(i))[1] - sigmoid).abs() < 1e-6);
        }
    }

    #[test]
    fn converges_before_cap_on_regularized_problem() {
        let (x, y) = blobs(120, 3, 6, 4);
        let m = fit(&x, &y, 3, &LinearConfig::new(Penalty::L2, 0.1)).unwrap();
        assert!(m.iterations < 5000);
        assert!(accuracy(&m, &x, &y) > 0.95);
    }

    #[test]
    fn infinite_feature_is_named() {
        let x = Matrix::new(vec![0.0, 1.0, f64::INFINITY, 2.0, 1.0, 3.0, 0.5, 1.0], 2);
        match fit(&x, &[0, 0, 1, 1], 2, &LinearConfig::new(Penalty::L2, 1.0)) {
            Err(Error::Train(msg)) => assert!(msg.contains("n_clicks"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = blobs(20, 3, 3, 6);
        let p = Problem { z: &x, y: &y, k: 3, d: 3 };
        let params: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin() * 0.3).collect();
        let mut grad = vec![0.0; 12];
        p.loss_grad(&params, &mut grad);
        for j in 0..12 {
            let mut a = params.clone();
            let mut b = params.clone();
            a[j] += 1e-5;
            b[j] -= 1e-5;
            let fd = (p.loss(&a) - p.loss(&b)) / 2e-5;
            assert!((fd - grad[j]).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
