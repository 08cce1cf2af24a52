//! Balanced bootstrap forest: every tree trains on a resample in which the
//! majority class is undersampled to the minority count, so each tree sees a
//! balanced problem even at extreme class imbalance.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{train_tree_on_indices, validate_samples};
use super::{check_dimension, DecisionTree, LabeledSample, ModelError, Scorer, TreeConfig};
use crate::seeding::derive_seed;
use crate::stream::Class;

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    /// Undersample the majority class to the minority count per tree.
    pub balance: bool,
    /// Resample with replacement; when false, balanced mode draws without
    /// replacement and unbalanced mode trains every tree on the full set.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 50,
            tree: TreeConfig::default(),
            balance: true,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedForest {
    pub(crate) trees: Vec<DecisionTree>,
    /// `(fraud, genuine)` counts of each tree's training resample.
    pub(crate) bag_class_counts: Vec<(usize, usize)>,
    pub(crate) n_features: usize,
}

impl BalancedForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn bag_class_counts(&self) -> &[(usize, usize)] {
        &self.bag_class_counts
    }

    /// Per-tree scores for one feature vector, in tree order.
    pub fn tree_scores(&self, features: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_dimension(self.n_features, features)?;
        self.trees.iter().map(|t| t.score(features)).collect()
    }

    pub(crate) fn from_parts(
        trees: Vec<DecisionTree>,
        bag_class_counts: Vec<(usize, usize)>,
        n_features: usize,
    ) -> Self {
        Self {
            trees,
            bag_class_counts,
            n_features,
        }
    }
}

impl Scorer for BalancedForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn score(&self, features: &[f64]) -> Result<f64, ModelError> {
        check_dimension(self.n_features, features)?;
        let sum: f64 = self
            .trees
            .iter()
            .map(|t| t.score(features).expect("dimension already checked"))
            .sum();
        Ok(sum / self.trees.len() as f64)
    }
}

/// Trains a forest. Trees are built in parallel; each derives its RNG from
/// `(cfg.seed, tree index)`, so results are identical for any thread count.
pub fn train_balanced_forest(
    samples: &[LabeledSample],
    cfg: &ForestConfig,
) -> Result<BalancedForest, ModelError> {
    if cfg.n_trees == 0 {
        return Err(ModelError::InvalidConfig("n_trees must be >= 1".into()));
    }
    validate_samples(samples)?;
    cfg.tree.validate(samples[0].features.len())?;

    let pos: Vec<u32> = belonging(samples, Class::Fraud);
    let neg: Vec<u32> = belonging(samples, Class::Genuine);
    if cfg.balance {
        if pos.is_empty() {
            return Err(ModelError::MissingClass(Class::Fraud));
        }
        if neg.is_empty() {
            return Err(ModelError::MissingClass(Class::Genuine));
        }
    }

    let results: Result<Vec<(DecisionTree, (usize, usize))>, ModelError> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[i as u64]));
            let bag = draw_bag(&pos, &neg, samples.len(), cfg, &mut rng);
            let counts = bag_counts(samples, &bag);
            let tree = train_tree_on_indices(samples, bag, &cfg.tree, &mut rng)?;
            Ok((tree, counts))
        })
        .collect();
    let (trees, bag_class_counts) = results?.into_iter().unzip();
    Ok(BalancedForest::from_parts(
        trees,
        bag_class_counts,
        samples[0].features.len(),
    ))
}

fn belonging(samples: &[LabeledSample], class: Class) -> Vec<u32> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.class == class)
        .map(|(i, _)| i as u32)
        .collect()
}

fn draw_bag(
    pos: &[u32],
    neg: &[u32],
    total: usize,
    cfg: &ForestConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    if cfg.balance {
        let c = pos.len().min(neg.len());
        let mut bag = Vec::with_capacity(2 * c);
        for class_indices in [pos, neg] {
            if cfg.bootstrap {
                bag.extend((0..c).map(|_| class_indices[rng.gen_range(0..class_indices.len())]));
            } else if c == class_indices.len() {
                bag.extend_from_slice(class_indices);
            } else {
                bag.extend(
                    rand::seq::index::sample(rng, class_indices.len(), c)
                        .into_iter()
                        .map(|j| class_indices[j]),
                );
            }
        }
        bag
    } else if cfg.bootstrap {
        (0..total).map(|_| rng.gen_range(0..total) as u32).collect()
    } else {
        (0..total as u32).collect()
    }
}

fn bag_counts(samples: &[LabeledSample], bag: &[u32]) -> (usize, usize) {
    let fraud = bag
        .iter()
        .filter(|&&i| samples[i as usize].class == Class::Fraud)
        .count();
    (fraud, bag.len() - fraud)
}
