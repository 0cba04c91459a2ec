//! Average-ensemble tree classifiers built from scratch.
//!
//! | algorithm     | rows per tree           | candidate features      | threshold        |
//! |---------------|-------------------------|-------------------------|------------------|
//! | random forest | bootstrap (n with repl.)| floor(sqrt(p)), min 1   | best Gini cut    |
//! | extra trees   | all rows                | floor(sqrt(p)), min 1   | one random cut   |
//! | bagging       | bootstrap               | all p                   | best Gini cut    |
//!
//! Trees are fully grown by default (no depth limit, `min_samples_split = 2`).
//! Each tree draws from its own generator seeded by `(seed, tree index)`, so a
//! model is bit-identical no matter how many threads trained it. Prediction
//! averages the per-tree leaf distributions and takes the arg-max, breaking
//! ties toward the lowest class code.

mod persist;
mod split;
mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use persist::{load_model, save_model, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use split::{bootstrap_sample, find_optimal_split, find_random_split, Split, TrainingData};
pub use tree::{DecisionTree, Node};

use crate::error::{Error, Result};
use crate::exec::{mix_seed, Execution};
use split::FeatureSampling;
use tree::GrowParams;

pub const DEFAULT_ESTIMATORS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "et")]
    ExtraTrees,
    #[serde(rename = "bagging")]
    Bagging,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::RandomForest, Algorithm::ExtraTrees, Algorithm::Bagging];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RandomForest => "RandomForest",
            Algorithm::ExtraTrees => "ExtraTrees",
            Algorithm::Bagging => "Bagging",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Algorithm::RandomForest => "rf",
            Algorithm::ExtraTrees => "et",
            Algorithm::Bagging => "bagging",
        }
    }

    /// Number of coherence columns at which each algorithm performed best
    /// on the original field data.
    pub fn default_alpha(self) -> u32 {
        match self {
            Algorithm::RandomForest => 3,
            Algorithm::ExtraTrees => 4,
            Algorithm::Bagging => 5,
        }
    }

    pub fn default_bootstrap(self) -> bool {
        !matches!(self, Algorithm::ExtraTrees)
    }

    pub fn default_max_features(self) -> MaxFeatures {
        match self {
            Algorithm::Bagging => MaxFeatures::All,
            _ => MaxFeatures::Sqrt,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "randomforest" | "random-forest" => Ok(Algorithm::RandomForest),
            "et" | "extratrees" | "extra-trees" => Ok(Algorithm::ExtraTrees),
            "bagging" => Ok(Algorithm::Bagging),
            other => Err(format!("unknown algorithm `{other}` (rf|et|bagging)")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => n_features.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub algorithm: Algorithm,
    pub n_estimators: usize,
    /// Overrides the algorithm's default.
    pub max_features: Option<MaxFeatures>,
    /// Overrides the algorithm's default.
    pub bootstrap: Option<bool>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            n_estimators: DEFAULT_ESTIMATORS,
            max_features: None,
            bootstrap: None,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_estimators(mut self, n: usize) -> Self {
        self.n_estimators = n;
        self
    }

    pub fn bootstrap(&self) -> bool {
        self.bootstrap.unwrap_or(self.algorithm.default_bootstrap())
    }

    pub fn max_features(&self) -> MaxFeatures {
        self.max_features.unwrap_or(self.algorithm.default_max_features())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be >= 2".into()));
        }
        Ok(())
    }

    fn grow_params(&self, n_features: usize) -> GrowParams {
        let max_features = self.max_features().resolve(n_features);
        GrowParams {
            sampling: FeatureSampling {
                max_features,
                shuffle: max_features < n_features,
            },
            random_thresholds: self.algorithm == Algorithm::ExtraTrees,
            min_samples_split: self.min_samples_split,
            max_depth: self.max_depth,
        }
    }
}

/// A trained forest. Immutable; safe to share across prediction threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    config: EnsembleConfig,
    n_classes: usize,
    n_features: usize,
    trees: Vec<DecisionTree>,
}

pub fn train_ensemble(data: &TrainingData, cfg: &EnsembleConfig) -> Result<EnsembleModel> {
    train_ensemble_with(data, cfg, Execution::default())
}

/// Trains `cfg.n_estimators` trees, each independently seeded.
pub fn train_ensemble_with(
    data: &TrainingData,
    cfg: &EnsembleConfig,
    exec: Execution,
) -> Result<EnsembleModel> {
    cfg.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::Training("no training rows".into()));
    }
    if data.n_features == 0 {
        return Err(Error::Training("no feature columns".into()));
    }
    if let Some(&bad) = data.y.iter().find(|&&c| c as usize >= data.n_classes) {
        return Err(Error::Training(format!("label {bad} outside 0..{}", data.n_classes)));
    }
    let params = cfg.grow_params(data.n_features);
    let bootstrap = cfg.bootstrap();
    let n = data.n_rows();
    let trees = exec.map_range(cfg.n_estimators, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, t as u64));
        let weights = if bootstrap {
            let mut w = vec![0u32; n];
            for p in bootstrap_sample(n, &mut rng) {
                w[p] += 1;
            }
            w
        } else {
            vec![1u32; n]
        };
        DecisionTree::grow(data, &weights, params, &mut rng)
    });
    Ok(EnsembleModel {
        config: *cfg,
        n_classes: data.n_classes,
        n_features: data.n_features,
        trees,
    })
}

/// Element-wise mean of equally long probability vectors.
pub fn average_distributions(vectors: &[Vec<f64>]) -> Vec<f64> {
    let width = vectors.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; width];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl EnsembleModel {
    pub(crate) fn from_parts(
        config: EnsembleConfig,
        n_classes: usize,
        n_features: usize,
        trees: Vec<DecisionTree>,
    ) -> Self {
        Self { config, n_classes, n_features, trees }
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Mean of the trees' leaf distributions, summed in tree order.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::Width { expected: self.n_features, found: row.len() });
        }
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for &(c, share) in tree.leaf_for(row) {
                acc[c as usize] += share;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(acc)
    }

    pub fn predict(&self, row: &[f64]) -> Result<(Vec<f64>, u32)> {
        let p = self.predict_proba(row)?;
        let label = argmax(&p) as u32;
        Ok((p, label))
    }

    /// Predicted class of every row in a row-major table.
    pub fn predict_rows(&self, x: &[f64], exec: Execution) -> Result<Vec<u32>> {
        if self.n_features == 0 || !x.len().is_multiple_of(self.n_features) {
            return Err(Error::Width { expected: self.n_features, found: x.len() });
        }
        let n = x.len() / self.n_features;
        exec.try_map_range(n, |i| {
            self.predict(&x[i * self.n_features..(i + 1) * self.n_features])
                .map(|(_, c)| c)
        })
    }
}
