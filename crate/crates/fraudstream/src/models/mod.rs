//! Probabilistic binary classifiers: CART-style decision trees, balanced
//! bootstrap forests, and a weighted two-model ensemble.
//!
//! All models are immutable once trained and score into `[0, 1]`, where
//! higher means more likely fraudulent. Training is deterministic for a
//! fixed seed, including under parallel tree construction: each tree derives
//! its own RNG from `(forest seed, tree index)`, so the schedule cannot
//! change results.

mod dump;
mod ensemble;
mod forest;
mod tree;

pub use dump::{load_forest, save_forest};
pub use ensemble::WeightedEnsemble;
pub use forest::{train_balanced_forest, BalancedForest, ForestConfig};
pub use tree::{train_tree, DecisionTree, Node, TreeConfig};

use crate::stream::Class;
use thiserror::Error;

/// A training example: feature vector, class, and a positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub class: Class,
    pub weight: f64,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, class: Class) -> Self {
        Self {
            features,
            class,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training set has no {0} samples")]
    MissingClass(Class),
    #[error("feature vector has length {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("{role} model is not trained")]
    Untrained { role: &'static str },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model dump: {0}")]
    MalformedDump(String),
}

/// Anything that can score a feature vector into `[0, 1]`.
pub trait Scorer: Send + Sync {
    fn n_features(&self) -> usize;

    /// Scores one feature vector. Errors when the vector length does not
    /// match the training dimension.
    fn score(&self, features: &[f64]) -> Result<f64, ModelError>;
}

pub(crate) fn check_dimension(expected: usize, features: &[f64]) -> Result<(), ModelError> {
    if features.len() != expected {
        return Err(ModelError::DimensionMismatch {
            expected,
            found: features.len(),
        });
    }
    Ok(())
}
