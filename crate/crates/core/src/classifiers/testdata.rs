//! Small synthetic matrices for classifier unit tests.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Matrix;
use crate::rng;

/// `n` rows split evenly over `k` Gaussian blobs in `d` dimensions. Centers
/// sit 6 apart on distinct axes, unit noise.
pub fn blobs(n: usize, k: usize, d: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut r = rng::stream(seed, &["blobs"]);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        for j in 0..d {
            let center = if j % k == c { 6.0 } else { 0.0 };
            data.push(center + noise.sample(&mut r));
        }
        y.push(c);
    }
    (Matrix::new(data, d), y)
}

pub fn nearest_centroid_accuracy(x: &Matrix, y: &[usize], k: usize) -> f64 {
    let d = x.n_cols();
    let mut centroids = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for (row, &c) in x.rows().zip(y) {
        counts[c] += 1.0;
        for j in 0..d {
            centroids[c][j] += row[j];
        }
    }
    for c in 0..k {
        centroids[c].iter_mut().for_each(|v| *v /= counts[c]);
    }
    let hits = x
        .rows()
        .zip(y)
        .filter(|(row, &c)| {
            let dist = |m: &Vec<f64>| m.iter().zip(row.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            (0..k).all(|o| dist(&centroids[c]) <= dist(&centroids[o]))
        })
        .count();
    hits as f64 / y.len() as f64
}

/// Two uniform features in [-1, 1]; label is 1 when their signs agree.
pub fn xor(n: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut r = rng::stream(seed, &["xor"]);
    let mut data = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = r.random_range(-1.0..1.0);
        let b: f64 = r.random_range(-1.0..1.0);
        data.extend([a, b]);
        y.push(usize::from((a > 0.0) == (b > 0.0)));
    }
    (Matrix::new(data, 2), y)
}
