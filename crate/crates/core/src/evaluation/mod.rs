//! Label encoding, stratified cross-validation, weighted metrics and the
//! NoDC-versus-coherence experiment drivers.
//!
//! Feature extraction runs once over the whole dataset before folding, so a
//! held-out row's coherence columns may be computed from training rows of the
//! same user (and vice versa). This mirrors the original pipeline order; it is
//! a known source of optimism in the reported scores.

mod experiment;
mod folds;
mod labels;
mod metrics;

pub use experiment::{
    cross_validate, cross_validate_matrix, run_experiment, CvOutcome, ExperimentCell,
    ExperimentSettings, ExperimentSpec, ExperimentTable, DEFAULT_FOLDS,
};
pub use folds::{stratified_folds, FoldAssignment};
pub use labels::{encode_labels, LabelEncoding};
pub use metrics::{weighted_metrics, BinaryCounts, ConfusionMatrix, MetricsReport, METRIC_NAMES};
