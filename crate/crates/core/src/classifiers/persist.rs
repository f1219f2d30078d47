//! Model files: a JSON document with a magic string, a format version and
//! the hash of the feature catalog the model was trained against.
//!
//! ```json
//! {"magic": "AGENTPRINT-MODEL", "format_version": 1,
//!  "catalog_hash": "<sha256 hex>", "model": { ... }}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::TrainedModel;
use crate::error::{Error, Result};
use crate::features::catalog_hash;

pub const MAGIC: &str = "AGENTPRINT-MODEL";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    magic: String,
    format_version: u64,
    catalog_hash: String,
    model: TrainedModel,
}

pub fn model_to_string(model: &TrainedModel) -> String {
    let env = Envelope {
        magic: MAGIC.into(),
        format_version: FORMAT_VERSION,
        catalog_hash: catalog_hash(),
        model: model.clone(),
    };
    serde_json::to_string(&env).expect("models always serialize")
}

pub fn model_from_str(text: &str) -> Result<TrainedModel> {
    let bad = |m: String| Error::ModelFormat(m);
    let value: Value = serde_json::from_str(text).map_err(|e| bad(format!("unreadable model file: {e}")))?;
    if value.get("magic").and_then(Value::as_str) != Some(MAGIC) {
        return Err(bad("missing model header".into()));
    }
    match value.get("format_version").and_then(Value::as_u64) {
        Some(FORMAT_VERSION) => {}
        other => return Err(bad(format!("unsupported format version {other:?}, expected {FORMAT_VERSION}"))),
    }
    let expected = catalog_hash();
    match value.get("catalog_hash").and_then(Value::as_str) {
        Some(h) if h == expected => {}
        other => return Err(bad(format!("feature catalog mismatch: file has {other:?}, this build uses {expected}"))),
    }
    let env: Envelope = serde_json::from_value(value).map_err(|e| bad(format!("invalid model body: {e}")))?;
    Ok(env.model)
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata::blobs;
    use crate::classifiers::{Classifier, GbtConfig, Hyperparams, Registry};
    use rand::Rng;

    fn trained(family: &str) -> TrainedModel {
        let (x, y) = blobs(60, 3, 41, 2);
        let reg = Registry::builtin();
        let trainer = reg.get(family).unwrap();
        let config = match family {
            "gbt" => Hyperparams::Gbt(GbtConfig { n_estimators: 10, ..GbtConfig::default() }),
            _ => trainer.default_config(),
        };
        TrainedModel {
            family: family.into(),
            class_names: vec!["a".into(), "b".into(), "c".into()],
            model: trainer.fit(&x, &y, 3, &config, 1).unwrap(),
            config,
            seed: 1,
        }
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let mut rng = crate::rng::stream(0, &["persist"]);
        for family in ["gbt", "forest", "lr-l2", "lr-l1"] {
            let m = trained(family);
            let back = model_from_str(&model_to_string(&m)).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..41)
                    .map(|_| if rng.random_bool(0.1) { f64::NAN } else { rng.random_range(-20.0..20.0) })
                    .collect();
                assert_eq!(m.predict_proba(&x), back.predict_proba(&x), "{family}");
            }
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = model_to_string(&trained("lr-l2"));
        let cut = &text[..text.len() / 2];
        assert!(matches!(model_from_str(cut), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn version_and_catalog_mismatch_are_rejected() {
        let text = model_to_string(&trained("lr-l2"));
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["format_version"] = 2.into();
        assert!(matches!(model_from_str(&v.to_string()), Err(Error::ModelFormat(_))));
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["catalog_hash"] = "00".into();
        assert!(matches!(model_from_str(&v.to_string()), Err(Error::ModelFormat(_))));
        assert!(matches!(model_from_str("{\"model\":{}}"), Err(Error::ModelFormat(_))));
    }
}
