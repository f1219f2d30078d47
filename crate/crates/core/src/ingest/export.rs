//! Feature CSV: 41 feature columns, then `label` (agent id) and
//! `episode_id`. Missing values are empty fields.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use crate::dataset::{FeatureVector, LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::features::{FEATURE_NAMES, N_FEATURES};

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("feature CSV: {e}"))
}

pub fn write_csv<W: Write>(ds: &LabeledDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.extend(["label", "episode_id"]);
    w.write_record(&header).map_err(csv_err)?;
    for ((row, &label), id) in ds.rows().iter().zip(ds.labels()).zip(ds.episode_ids()) {
        let mut record: Vec<String> = row
            .0
            .iter()
            .map(|v| if v.is_nan() { String::new() } else { v.to_string() })
            .collect();
        record.push(ds.class_names()[label].clone());
        record.push(id.clone());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Config(format!("feature CSV: {e}")))?;
    Ok(())
}

/// Reads a feature CSV. Class names are the sorted unique labels present.
pub fn read_csv<R: Read>(input: R, split: Split) -> Result<LabeledDataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain(["label", "episode_id"]).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema("feature CSV header does not match the feature catalog".into()));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let mut values = [0.0; N_FEATURES];
        for (j, v) in values.iter_mut().enumerate() {
            let field = &record[j];
            *v = if field.is_empty() {
                f64::NAN
            } else {
                field
                    .parse()
                    .map_err(|_| Error::Schema(format!("row {}: bad number {field:?} in {}", line + 1, FEATURE_NAMES[j])))?
            };
        }
        rows.push(FeatureVector(values));
        labels.push(record[N_FEATURES].to_string());
        ids.push(record[N_FEATURES + 1].to_string());
    }
    let class_names: Vec<String> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let idx = labels
        .iter()
        .map(|l| class_names.iter().position(|c| c == l).expect("label is in class list"))
        .collect();
    LabeledDataset::new(rows, idx, ids, class_names, split)
}
