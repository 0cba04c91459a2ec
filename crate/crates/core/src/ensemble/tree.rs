use rand::Rng;
use serde::{Deserialize, Serialize};

use super::split::{ClassCounts, FeatureSampling, Splitter, TrainingData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Sparse class-frequency vector: `(class, share)` for every class present,
    /// ascending by class; shares sum to 1.
    Leaf { distribution: Vec<(u32, f64)> },
}

/// Growth limits and split strategy for one tree.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub sampling: FeatureSampling,
    pub random_thresholds: bool,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
}

/// Binary classification tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        let mut stack = vec![(0usize, 0usize)];
        let mut deepest = 0;
        while let Some((id, d)) = stack.pop() {
            deepest = deepest.max(d);
            if let Node::Split { left, right, .. } = self.nodes[id] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        deepest
    }

    /// Class distribution of the leaf reached by `row`.
    pub fn leaf_for(&self, row: &[f64]) -> &[(u32, f64)] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split { feature, threshold, left, right } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { distribution } => return distribution,
            }
        }
    }

    pub fn predict_proba(&self, row: &[f64], n_classes: usize) -> Vec<f64> {
        let mut p = vec![0.0; n_classes];
        for &(c, share) in self.leaf_for(row) {
            p[c as usize] = share;
        }
        p
    }

    /// Grows a tree over the rows with non-zero weight.
    pub(crate) fn grow(
        data: &TrainingData,
        weights: &[u32],
        params: GrowParams,
        rng: &mut impl Rng,
    ) -> Self {
        let mut rows: Vec<usize> = (0..data.n_rows()).filter(|&r| weights[r] > 0).collect();
        let mut splitter = Splitter::new(data.n_features, data.n_classes);
        let mut nodes = vec![Node::Leaf { distribution: Vec::new() }];
        // (node id, row range, depth); left child is processed first.
        let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
        while let Some((id, start, end, depth)) = stack.pop() {
            let node_rows = &rows[start..end];
            let counts = ClassCounts::of_rows(data, node_rows, weights);
            let can_split = counts.total >= params.min_samples_split as u64
                && !counts.is_pure()
                && params.max_depth.is_none_or(|m| depth < m);
            let split = if can_split {
                splitter.split_node(
                    data,
                    node_rows,
                    weights,
                    &counts,
                    params.sampling,
                    params.random_thresholds,
                    rng,
                )
            } else {
                None
            };
            match split {
                None => nodes[id] = leaf(&counts),
                Some(s) => {
                    let mid = start + partition(&mut rows[start..end], |r| {
                        data.value(r, s.feature) <= s.threshold
                    });
                    debug_assert!(mid > start && mid < end);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { distribution: Vec::new() });
                    nodes.push(Node::Leaf { distribution: Vec::new() });
                    nodes[id] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, mid, end, depth + 1));
                    stack.push((left, start, mid, depth + 1));
                }
            }
        }
        Self { nodes }
    }
}

fn leaf(counts: &ClassCounts) -> Node {
    let total = counts.total as f64;
    let distribution = counts
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(c, &n)| (c as u32, n as f64 / total))
        .collect();
    Node::Leaf { distribution }
}

/// Moves rows satisfying `goes_left` to the front, preserving relative order
/// on both sides; returns the count of left rows.
fn partition(rows: &mut [usize], goes_left: impl Fn(usize) -> bool) -> usize {
    let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| goes_left(r));
    let n_left = left.len();
    rows[..n_left].copy_from_slice(&left);
    rows[n_left..].copy_from_slice(&right);
    n_left
}
