//! Measurement protocols: closed-set F1, leave-one-agent-out AUROC,
//! permutation importance and learning curves.

pub mod auroc;
pub mod curves;
pub mod importance;
pub mod metrics;
pub mod open_set;
pub mod report;

pub use auroc::auroc;
pub use curves::{mean_trace_length, nested_subsample, training_fraction_curve, truncation_curve, CurvePoint, Truncation};
pub use importance::{permutation_importance, FeatureImportance, ImportanceReport};
pub use metrics::{
    closed_set_eval, confusion_matrix, macro_f1, per_class_f1, predict_all, random_predictions, ClosedSetReport,
};
pub use open_set::{open_set_eval, open_set_loo, unknown_score, LooOutcome, OpenSetReport};
pub use report::{Report, Table};
