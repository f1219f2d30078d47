//! Area under the ROC curve from two score samples.

use crate::error::{Error, Result};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from average ranks (Mann-Whitney U), which is
/// the trapezoidal ROC area.
pub fn auroc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::Eval(format!(
            "AUROC needs both classes, got {} positive and {} negative scores",
            positive.len(),
            negative.len()
        )));
    }
    if positive.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::Eval("NaN score".into()));
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(pos: &[f64], neg: &[f64]) -> f64 {
        let mut s = 0.0;
        for &p in pos {
            for &n in neg {
                s += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
            }
        }
        s / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn simple_cases() {
        assert_eq!(auroc(&[1.0, 2.0], &[0.0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(auroc(&[1.0], &[1.0]).unwrap(), 0.5);
        assert!(auroc(&[], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn equals_pairwise_count(
            pos in proptest::collection::vec(0u8..6, 1..40),
            neg in proptest::collection::vec(0u8..6, 1..40),
        ) {
            let pos: Vec<f64> = pos.iter().map(|&v| v as f64 / 5.0).collect();
            let neg: Vec<f64> = neg.iter().map(|&v| v as f64 / 5.0).collect();
            prop_assert!((auroc(&pos, &neg).unwrap() - pairwise(&pos, &neg)).abs() < 1e-9);
        }
    }
}
