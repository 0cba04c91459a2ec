//! Portable model files: a JSON document with a format tag, a version, the
//! training configuration and one set of parallel node arrays per tree.
//!
//! Node `i` of a tree is a split when `feature[i] >= 0` (children at
//! `left[i]`, `right[i]`) and a leaf otherwise, with its class shares in
//! `leaf[i]`. Floats are written in shortest round-trip form, so a loaded
//! model predicts bit-identically.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DecisionTree, EnsembleConfig, EnsembleModel, Node};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "geocoherence-forest";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: EnsembleConfig,
    n_classes: usize,
    n_features: usize,
    trees: Vec<TreeArrays>,
}

#[derive(Serialize, Deserialize, Default)]
struct TreeArrays {
    feature: Vec<i64>,
    threshold: Vec<f64>,
    left: Vec<u32>,
    right: Vec<u32>,
    leaf: Vec<Vec<(u32, f64)>>,
}

impl TreeArrays {
    fn from_tree(tree: &DecisionTree) -> Self {
        let mut a = TreeArrays::default();
        for node in tree.nodes() {
            match node {
                Node::Split { feature, threshold, left, right } => {
                    a.feature.push(*feature as i64);
                    a.threshold.push(*threshold);
                    a.left.push(*left as u32);
                    a.right.push(*right as u32);
                    a.leaf.push(Vec::new());
                }
                Node::Leaf { distribution } => {
                    a.feature.push(-1);
                    a.threshold.push(0.0);
                    a.left.push(0);
                    a.right.push(0);
                    a.leaf.push(distribution.clone());
                }
            }
        }
        a
    }

    fn into_tree(self, n_features: usize, n_classes: usize) -> Result<DecisionTree> {
        let n = self.feature.len();
        if [self.threshold.len(), self.left.len(), self.right.len(), self.leaf.len()]
            .iter()
            .any(|&l| l != n)
            || n == 0
        {
            return Err(Error::Format("node arrays differ in length or are empty".into()));
        }
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let node = if self.feature[i] >= 0 {
                let (l, r) = (self.left[i] as usize, self.right[i] as usize);
                if self.feature[i] as usize >= n_features || l >= n || r >= n || l <= i || r <= i {
                    return Err(Error::Format(format!("node {i} has invalid links")));
                }
                Node::Split {
                    feature: self.feature[i] as usize,
                    threshold: self.threshold[i],
                    left: l,
                    right: r,
                }
            } else {
                if self.leaf[i].iter().any(|&(c, _)| c as usize >= n_classes) {
                    return Err(Error::Format(format!("leaf {i} references an unknown class")));
                }
                Node::Leaf { distribution: self.leaf[i].clone() }
            };
            nodes.push(node);
        }
        Ok(DecisionTree::from_nodes(nodes))
    }
}

pub fn save_model<W: Write>(model: &EnsembleModel, out: W) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_FORMAT_VERSION,
        config: *model.config(),
        n_classes: model.n_classes(),
        n_features: model.n_features(),
        trees: model.trees().iter().map(TreeArrays::from_tree).collect(),
    };
    serde_json::to_writer(out, &file)?;
    Ok(())
}

pub fn load_model<R: Read>(input: R) -> Result<EnsembleModel> {
    let file: ModelFile = serde_json::from_reader(input)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unknown format tag `{}`", file.format)));
    }
    if file.version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", file.version)));
    }
    let trees = file
        .trees
        .into_iter()
        .map(|t| t.into_tree(file.n_features, file.n_classes))
        .collect::<Result<Vec<_>>>()?;
    if trees.len() != file.config.n_estimators {
        return Err(Error::Format("tree count does not match n_estimators".into()));
    }
    Ok(EnsembleModel::from_parts(file.config, file.n_classes, file.n_features, trees))
}
