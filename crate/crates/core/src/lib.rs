//! Continuous user authentication from GPS traces.
//!
//! The pipeline turns per-user location traces into feature rows (position,
//! calendar fields and *distance-coherence* columns measuring how far each
//! point lies from the user's usual whereabouts at similar hours), trains
//! average-ensemble tree classifiers on them, scores them with stratified
//! cross-validation, and converts the resulting false-negative rate into an
//! adversary success probability.
//!
//! * [`data`]: trace ingestion, summaries, synthetic habit traces
//! * [`features`]: base and coherence features, distribution statistics
//! * [`ensemble`]: random forest, extra trees and bagging from scratch
//! * [`evaluation`]: label encoding, stratified folds, weighted metrics, experiments
//! * [`threat`]: PIN-plus-behaviour adversary arithmetic
//! * [`exec`]: sequential / parallel execution of the inner loops

pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod features;
pub mod threat;

pub use error::{Error, Result};
