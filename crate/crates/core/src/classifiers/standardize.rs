//! Median imputation followed by z-scoring, fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub impute: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

impl Standardizer {
    /// An all-missing column imputes to 0.
    pub fn fit(x: &Matrix) -> Self {
        let d = x.n_cols();
        let n = x.n_rows() as f64;
        let mut impute = Vec::with_capacity(d);
        let mut mean = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        for j in 0..d {
            let col = x.column(j);
            let med = median(col.iter().copied().filter(|v| !v.is_nan()).collect()).unwrap_or(0.0);
            let filled: Vec<f64> = col.iter().map(|&v| if v.is_nan() { med } else { v }).collect();
            let m = filled.iter().sum::<f64>() / n;
            let constant = filled.windows(2).all(|w| w[0] == w[1]);
            let var = filled.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            impute.push(med);
            mean.push(m);
            std.push(if constant { 0.0 } else { var.sqrt() });
        }
        Standardizer { impute, mean, std }
    }

    /// Constant columns map to 0.
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let v = if v.is_nan() { self.impute[j] } else { v };
                if self.std[j] == 0.0 {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        Matrix::from_rows(
            x.rows().map(|r| self.transform_row(r)).collect::<Vec<_>>().iter().map(Vec::as_slice),
            x.n_cols(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn training_columns_are_standardized(
            data in proptest::collection::vec(prop_oneof![Just(f64::NAN), -1e3f64..1e3], 3 * 20)
        ) {
            let x = Matrix::new(data, 3);
            let s = Standardizer::fit(&x);
            let z = s.transform(&x);
            for j in 0..3 {
                let col = z.column(j);
                let n = col.len() as f64;
                let m = col.iter().sum::<f64>() / n;
                let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
                prop_assert!(m.abs() < 1e-9);
                if s.std[j] > 1e-9 {
                    prop_assert!((sd - 1.0).abs() < 1e-9, "std {}", sd);
                } else {
                    prop_assert!(col.iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn constant_and_missing_columns() {
        let x = Matrix::new(vec![5.0, f64::NAN, 5.0, f64::NAN, 5.0, 1.0], 2);
        let s = Standardizer::fit(&x);
        assert_eq!(s.impute, vec![5.0, 1.0]);
        let z = s.transform(&x);
        assert!(z.column(0).iter().all(|&v| v == 0.0));
        assert!(z.column(1).iter().all(|&v| v == 0.0));
        let all_missing = Matrix::new(vec![f64::NAN, f64::NAN], 1);
        assert_eq!(Standardizer::fit(&all_missing).impute, vec![0.0]);
    }
}
