//! Feature vectors and labeled tabular datasets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_index, FEATURE_NAMES, N_FEATURES};

/// The 41 features of one episode, aligned with [`FEATURE_NAMES`]. NaN marks
/// a missing entry.
#[derive(Debug, Clone, Copy)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.0[i])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Entry-wise equality treating missing == missing and comparing bits
    /// otherwise.
    pub fn bit_eq(&self, other: &FeatureVector) -> bool {
        self.0
            .iter()
            .zip(other.0.iter())
            .all(|(a, b)| (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits())
    }

    pub fn names() -> &'static [&'static str; N_FEATURES] {
        &FEATURE_NAMES
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}"))),
        }
    }
}

/// Rows of features with class indices into `class_names`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    rows: Vec<FeatureVector>,
    labels: Vec<usize>,
    episode_ids: Vec<String>,
    class_names: Vec<String>,
    split: Split,
}

impl LabeledDataset {
    pub fn new(
        rows: Vec<FeatureVector>,
        labels: Vec<usize>,
        episode_ids: Vec<String>,
        class_names: Vec<String>,
        split: Split,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != episode_ids.len() {
            return Err(Error::Config("rows, labels and episode ids differ in length".into()));
        }
        let mut sorted = class_names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != class_names.len() {
            return Err(Error::Config("class names must be unique".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(LabeledDataset {
            rows,
            labels,
            episode_ids,
            class_names,
            split,
        })
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn episode_ids(&self) -> &[String] {
        &self.episode_ids
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Rows at the given positions, same class list.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            episode_ids: indices.iter().map(|&i| self.episode_ids[i].clone()).collect(),
            class_names: self.class_names.clone(),
            split: self.split,
        }
    }

    /// Keeps only rows of the named classes and re-indexes them against
    /// `class_names` (which must contain every kept class).
    pub fn restrict_to(&self, class_names: &[String]) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut ids = Vec::new();
        for i in 0..self.len() {
            let name = &self.class_names[self.labels[i]];
            if let Some(new) = class_names.iter().position(|c| c == name) {
                rows.push(self.rows[i]);
                labels.push(new);
                ids.push(self.episode_ids[i].clone());
            }
        }
        LabeledDataset {
            rows,
            labels,
            episode_ids: ids,
            class_names: class_names.to_vec(),
            split: self.split,
        }
    }

    /// Replaces the feature rows, keeping labels and ids.
    pub fn with_rows(&self, rows: Vec<FeatureVector>) -> LabeledDataset {
        assert_eq!(rows.len(), self.rows.len());
        LabeledDataset {
            rows,
            ..self.clone()
        }
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_rows(self.rows.iter().map(|r| r.as_slice()), N_FEATURES)
    }
}

/// Dense row-major matrix used by the classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, n_cols: usize) -> Self {
        assert!(n_cols > 0 && data.len().is_multiple_of(n_cols));
        Matrix {
            n_rows: data.len() / n_cols,
            data,
            n_cols,
        }
    }

    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, n_cols: usize) -> Self {
        let mut data = Vec::new();
        for r in rows {
            assert_eq!(r.len(), n_cols);
            data.extend_from_slice(r);
        }
        Matrix::new(data, n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        Matrix::from_rows(indices.iter().map(|&i| self.row(i)), self.n_cols)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols)
    }
}
