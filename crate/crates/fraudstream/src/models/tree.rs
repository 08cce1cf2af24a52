//! CART-style decision tree with Gini impurity and midpoint numeric splits.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{check_dimension, LabeledSample, ModelError, Scorer};
use crate::stream::Class;

/// Tree growth limits and split sampling.
#[derive(Debug, Clone)]
pub struct TreeConfig {
    /// Maximum number of splits on any root-to-leaf path.
    pub max_depth: usize,
    /// Minimum number of samples on each side of a split.
    pub min_leaf_size: usize,
    /// Candidate features sampled (without replacement) per split;
    /// `None` means `ceil(sqrt(n))`.
    pub features_per_split: Option<usize>,
    /// Additive smoothing of leaf fractions: `(pos + s) / (total + 2s)`.
    /// Zero keeps raw fractions.
    pub laplace_smoothing: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf_size: 5,
            features_per_split: None,
            laplace_smoothing: 0.0,
        }
    }
}

impl TreeConfig {
    pub(crate) fn validate(&self, n_features: usize) -> Result<usize, ModelError> {
        if self.max_depth == 0 {
            return Err(ModelError::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.min_leaf_size == 0 {
            return Err(ModelError::InvalidConfig(
                "min_leaf_size must be >= 1".into(),
            ));
        }
        if !(self.laplace_smoothing >= 0.0) {
            return Err(ModelError::InvalidConfig(
                "laplace_smoothing must be >= 0".into(),
            ));
        }
        let fps = match self.features_per_split {
            Some(0) => {
                return Err(ModelError::InvalidConfig(
                    "features_per_split must be >= 1".into(),
                ))
            }
            Some(f) if f > n_features => {
                return Err(ModelError::InvalidConfig(format!(
                    "features_per_split {f} exceeds feature count {n_features}"
                )))
            }
            Some(f) => f,
            None => (n_features as f64).sqrt().ceil() as usize,
        };
        Ok(fps.max(1))
    }
}

/// One tree node; exposed for the text dump format and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left, the rest right.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf { score: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) n_features: usize,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn from_parts(nodes: Vec<Node>, n_features: usize) -> Self {
        Self { nodes, n_features }
    }

    fn walk(&self, features: &[f64]) -> f64 {
        let mut node = 0usize;
        loop {
            match self.nodes[node] {
                Node::Leaf { score } => return score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    // NaN never satisfies <=, so it deterministically routes
                    // right.
                    node = if features[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

impl Scorer for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn score(&self, features: &[f64]) -> Result<f64, ModelError> {
        check_dimension(self.n_features, features)?;
        Ok(self.walk(features))
    }
}

/// Trains a tree on the full sample list. Deterministic for a fixed seed.
pub fn train_tree(
    samples: &[LabeledSample],
    cfg: &TreeConfig,
    seed: u64,
) -> Result<DecisionTree, ModelError> {
    validate_samples(samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<u32> = (0..samples.len() as u32).collect();
    train_tree_on_indices(samples, indices, cfg, &mut rng)
}

pub(crate) fn validate_samples(samples: &[LabeledSample]) -> Result<(), ModelError> {
    if samples.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let n = samples[0].features.len();
    if n == 0 {
        return Err(ModelError::InvalidConfig("feature vectors are empty".into()));
    }
    for s in samples {
        if s.features.len() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                found: s.features.len(),
            });
        }
        if !(s.weight > 0.0) || !s.weight.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "sample weight must be positive and finite, found {}",
                s.weight
            )));
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidConfig(
                "sample features must be finite".into(),
            ));
        }
    }
    Ok(())
}

/// Trains on an index multiset (bootstraps may repeat indices). The caller
/// is responsible for sample validation.
pub(crate) fn train_tree_on_indices(
    samples: &[LabeledSample],
    indices: Vec<u32>,
    cfg: &TreeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DecisionTree, ModelError> {
    if indices.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let n_features = samples[0].features.len();
    let fps = cfg.validate(n_features)?;
    let mut builder = Builder {
        samples,
        cfg,
        fps,
        n_features,
        rng,
        nodes: Vec::new(),
        scratch: Vec::new(),
    };
    builder.grow(indices, 0);
    Ok(DecisionTree::from_parts(builder.nodes, n_features))
}

struct Builder<'a> {
    samples: &'a [LabeledSample],
    cfg: &'a TreeConfig,
    fps: usize,
    n_features: usize,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, u32)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    weighted_impurity: f64,
}

impl Builder<'_> {
    /// Grows the subtree for `indices`, returning its root node id.
    fn grow(&mut self, indices: Vec<u32>, depth: usize) -> u32 {
        let (pos_w, total_w) = self.weights(&indices);
        let can_split = depth < self.cfg.max_depth
            && indices.len() >= 2 * self.cfg.min_leaf_size
            && pos_w > 0.0
            && pos_w < total_w;
        let split = if can_split { self.best_split(&indices) } else { None };
        match split {
            None => {
                let s = self.cfg.laplace_smoothing;
                let score = (pos_w + s) / (total_w + 2.0 * s);
                self.push(Node::Leaf { score })
            }
            Some(best) => {
                let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = indices.into_iter().partition(
                    |&i| self.samples[i as usize].features[best.feature] <= best.threshold,
                );
                let id = self.push(Node::Split {
                    feature: best.feature as u32,
                    threshold: best.threshold,
                    left: 0,
                    right: 0,
                });
                let left = self.grow(left_idx, depth + 1);
                let right = self.grow(right_idx, depth + 1);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[id as usize]
                {
                    *l = left;
                    *r = right;
                }
                id
            }
        }
    }

    fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    fn weights(&self, indices: &[u32]) -> (f64, f64) {
        let mut pos = 0.0;
        let mut total = 0.0;
        for &i in indices {
            let s = &self.samples[i as usize];
            total += s.weight;
            if s.class == Class::Fraud {
                pos += s.weight;
            }
        }
        (pos, total)
    }

    /// Scans sampled candidate features in ascending index order and, within
    /// a feature, thresholds in ascending order, keeping the first strict
    /// minimum of the weighted child impurity. Zero-gain splits on impure
    /// nodes are allowed; they can still untangle classes deeper down.
    fn best_split(&mut self, indices: &[u32]) -> Option<BestSplit> {
        let mut features: Vec<usize> =
            rand::seq::index::sample(&mut *self.rng, self.n_features, self.fps).into_vec();
        features.sort_unstable();

        let min_leaf = self.cfg.min_leaf_size;
        let (all_pos, all_total) = self.weights(indices);
        let mut scratch = std::mem::take(&mut self.scratch);
        let mut best: Option<BestSplit> = None;
        for &f in &features {
            scratch.clear();
            scratch.extend(
                indices
                    .iter()
                    .map(|&i| (self.samples[i as usize].features[f], i)),
            );
            scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_pos = 0.0;
            let mut left_total = 0.0;
            for i in 0..scratch.len() - 1 {
                let (v, idx) = scratch[i];
                let s = &self.samples[idx as usize];
                left_total += s.weight;
                if s.class == Class::Fraud {
                    left_pos += s.weight;
                }
                let next_v = scratch[i + 1].0;
                if v >= next_v {
                    continue;
                }
                let left_count = i + 1;
                let right_count = scratch.len() - left_count;
                if left_count < min_leaf || right_count < min_leaf {
                    continue;
                }
                let right_pos = all_pos - left_pos;
                let right_total = all_total - left_total;
                let left_neg = left_total - left_pos;
                let right_neg = right_total - right_pos;
                let impurity = (left_total
                    - (left_pos * left_pos + left_neg * left_neg) / left_total)
                    + (right_total - (right_pos * right_pos + right_neg * right_neg) / right_total);
                if best
                    .as_ref()
                    .map_or(true, |b| impurity < b.weighted_impurity)
                {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: v / 2.0 + next_v / 2.0,
                        weighted_impurity: impurity,
                    });
                }
            }
        }
        self.scratch = scratch;
        best
    }
}
