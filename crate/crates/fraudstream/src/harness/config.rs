//! Experiment configuration: a flat `key = value` file format, strict
//! parsing (unknown or duplicate keys are errors), validation, and seed
//! derivation for the various random streams of a run.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::models::ForestConfig;
use crate::seeding::derive_seed;
use crate::strategies::{Combining, StrategyId, StrategySpec};
use crate::stream::{generate_stream, load_dataset, Dataset, GenConfig};

use super::HarnessError;

/// Domain tags for [`derive_seed`], keeping the generator, the initial
/// training sets, each strategy cell, and each day's models on disjoint
/// random streams.
pub(crate) const TAG_GENERATOR: u64 = 0x6765_6e65_7261_7465;
pub(crate) const TAG_INIT: u64 = 0x696e_6974_5f73_6574;
pub(crate) const TAG_STRATEGY: u64 = 0x7374_7261_7465_6779;
pub(crate) const TAG_MODEL: u64 = 0x6d6f_6465_6c5f_6669;

/// Where the transaction stream comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Load an exported stream from a CSV file.
    File(PathBuf),
    /// Synthesize a stream with the embedded generator settings.
    Generate(GenConfig),
}

/// Granularity of scoring, alerting, and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Score and alert individual transactions.
    Transaction,
    /// Aggregate transaction scores per card and alert whole cards.
    Card,
}

/// Which model's training set absorbs pseudo-labeled transactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PseudoTarget {
    /// Only the feedback model sees pseudo-labels (default).
    Feedback,
    /// Only the delayed model sees pseudo-labels.
    Delayed,
    /// Both models see pseudo-labels.
    Both,
}

/// Full description of an experiment: data source, pipeline, strategy
/// list, budgets, windows, and model settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub pipeline: Pipeline,
    pub strategies: Vec<StrategyId>,
    /// Daily investigation budget (alerts per day).
    pub k: usize,
    /// Exploratory picks among the `k` alerts, for exploring strategies.
    pub q: usize,
    /// Daily pseudo-label (or synthetic sample) budget.
    pub m: usize,
    /// Days until checked labels become available for every transaction.
    pub delay: u32,
    /// Sliding window (days) of investigator feedback kept for training.
    pub feedback_window: u32,
    /// Sliding window (days) of delayed labels kept for training.
    pub delayed_window: u32,
    /// Leading days reserved for the initial training set; excluded from
    /// evaluation.
    pub warmup: u32,
    /// Independent repetitions per strategy.
    pub repetitions: u32,
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
    /// Weight of the delayed model in the two-model score blend.
    pub ensemble_weight: f64,
    /// Exploit share of mixed exploration / pseudo-labeling modes.
    pub mix_ratio: f64,
    /// Half-width of the uncertainty band around `uncertainty_center`.
    pub uncertainty_halfwidth: f64,
    /// Center of the uncertainty band.
    pub uncertainty_center: f64,
    /// Sharpness of the soft-maximum card aggregation.
    pub softmax_alpha: f64,
    /// Floor replacing non-risky scores in the logarithmic aggregation.
    pub log_floor: f64,
    /// Card aggregation used when a strategy name carries no prefix.
    pub default_combining: Combining,
    /// Days of history summed by the uncertainty-frequency card picker.
    pub qfu_window: u32,
    /// Destination of pseudo-labels in the card pipeline.
    pub pseudo_target: PseudoTarget,
    /// Neighbors considered by the synthetic interpolation oversampler.
    pub smote_neighbors: usize,
    /// Detector settings (forest size, tree shape, smoothing).
    pub forest: ForestConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Generate(GenConfig::default()),
            pipeline: Pipeline::Transaction,
            strategies: Vec::new(),
            k: 100,
            q: 5,
            m: 1000,
            delay: 7,
            feedback_window: 7,
            delayed_window: 15,
            warmup: 7,
            repetitions: 20,
            seed: 0,
            ensemble_weight: 0.5,
            mix_ratio: 0.7,
            uncertainty_halfwidth: 0.05,
            uncertainty_center: 0.5,
            softmax_alpha: 1.0,
            log_floor: 1e-3,
            default_combining: Combining::Max,
            qfu_window: 1,
            pseudo_target: PseudoTarget::Feedback,
            smote_neighbors: 5,
            forest: ForestConfig::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse::<T>()
        .map_err(|_| config_err(format!("bad value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(config_err(format!(
            "bad value for {key}: {other:?} (expected true or false)"
        ))),
    }
}

impl ExperimentConfig {
    /// Parses a flat `key = value` configuration text. Blank lines and
    /// lines starting with `#` are skipped; unknown and duplicate keys
    /// are rejected. The result is validated.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        let mut generator = GenConfig::default();
        let mut seen = BTreeSet::new();
        let mut dataset_path: Option<PathBuf> = None;
        let mut generator_keys: Vec<String> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(config_err(format!("duplicate key: {key}")));
            }

            let mut is_generator_key = true;
            match key {
                "days" => generator.days = parse_value(key, value)?,
                "transactions_per_day" => {
                    generator.transactions_per_day = parse_value(key, value)?
                }
                "fraud_rate" => generator.fraud_rate = parse_value(key, value)?,
                "n_features" => generator.n_features = parse_value(key, value)?,
                "genuine_components" => generator.genuine_components = parse_value(key, value)?,
                "fraud_components" => generator.fraud_components = parse_value(key, value)?,
                "genuine_spread" => generator.genuine_spread = parse_value(key, value)?,
                "fraud_spread" => generator.fraud_spread = parse_value(key, value)?,
                "genuine_scale" => generator.genuine_scale = parse_value(key, value)?,
                "fraud_scale" => generator.fraud_scale = parse_value(key, value)?,
                "fraud_separation" => generator.fraud_separation = parse_value(key, value)?,
                "fraud_card_rate" => generator.fraud_card_rate = parse_value(key, value)?,
                "fraud_txn_frac" => generator.fraud_txn_frac = parse_value(key, value)?,
                "mean_card_size" => generator.mean_card_size = parse_value(key, value)?,
                "drift_day" => generator.drift_day = parse_value(key, value)?,
                "drift_magnitude" => generator.drift_magnitude = parse_value(key, value)?,
                "population_drift_rate" => generator.population_drift_rate = parse_value(key, value)?,
                _ => is_generator_key = false,
            }
            if is_generator_key {
                generator_keys.push(key.to_string());
                continue;
            }

            match key {
                "dataset" => dataset_path = Some(PathBuf::from(value)),
                "pipeline" => {
                    cfg.pipeline = match value {
                        "transaction" => Pipeline::Transaction,
                        "card" => Pipeline::Card,
                        other => {
                            return Err(config_err(format!(
                                "bad value for pipeline: {other:?} (expected transaction or card)"
                            )))
                        }
                    }
                }
                "strategies" => {
                    let mut ids = Vec::new();
                    for item in value.split(',') {
                        let item = item.trim();
                        if item.is_empty() {
                            return Err(config_err("strategies list contains an empty entry"));
                        }
                        let id = StrategyId::from_str(item)
                            .map_err(|e| config_err(format!("bad strategy {item:?}: {e}")))?;
                        ids.push(id);
                    }
                    cfg.strategies = ids;
                }
                "k" => cfg.k = parse_value(key, value)?,
                "q" => cfg.q = parse_value(key, value)?,
                "m" => cfg.m = parse_value(key, value)?,
                "delay" => cfg.delay = parse_value(key, value)?,
                "feedback_window" => cfg.feedback_window = parse_value(key, value)?,
                "delayed_window" => cfg.delayed_window = parse_value(key, value)?,
                "warmup" => cfg.warmup = parse_value(key, value)?,
                "repetitions" => cfg.repetitions = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                "ensemble_weight" => cfg.ensemble_weight = parse_value(key, value)?,
                "mix_ratio" => cfg.mix_ratio = parse_value(key, value)?,
                "uncertainty_halfwidth" => cfg.uncertainty_halfwidth = parse_value(key, value)?,
                "uncertainty_center" => cfg.uncertainty_center = parse_value(key, value)?,
                "softmax_alpha" => cfg.softmax_alpha = parse_value(key, value)?,
                "log_floor" => cfg.log_floor = parse_value(key, value)?,
                "combining" => {
                    cfg.default_combining = match value {
                        "max" => Combining::Max,
                        "softmax" => Combining::Softmax,
                        "log" => Combining::Logarithmic,
                        other => {
                            return Err(config_err(format!(
                                "bad value for combining: {other:?} (expected max, softmax, or log)"
                            )))
                        }
                    }
                }
                "qfu_window" => cfg.qfu_window = parse_value(key, value)?,
                "pseudo_target" => {
                    cfg.pseudo_target = match value {
                        "feedback" => PseudoTarget::Feedback,
                        "delayed" => PseudoTarget::Delayed,
                        "both" => PseudoTarget::Both,
                        other => {
                            return Err(config_err(format!(
                                "bad value for pseudo_target: {other:?} \
                                 (expected feedback, delayed, or both)"
                            )))
                        }
                    }
                }
                "smote_neighbors" => cfg.smote_neighbors = parse_value(key, value)?,
                "n_trees" => cfg.forest.n_trees = parse_value(key, value)?,
                "max_depth" => cfg.forest.tree.max_depth = parse_value(key, value)?,
                "min_leaf_size" => cfg.forest.tree.min_leaf_size = parse_value(key, value)?,
                "features_per_split" => {
                    cfg.forest.tree.features_per_split = Some(parse_value(key, value)?)
                }
                "laplace_smoothing" => {
                    cfg.forest.tree.laplace_smoothing = parse_value(key, value)?
                }
                "bootstrap" => cfg.forest.bootstrap = parse_bool(key, value)?,
                other => return Err(config_err(format!("unknown key: {other}"))),
            }
        }

        match dataset_path {
            Some(path) => {
                if let Some(first) = generator_keys.first() {
                    return Err(config_err(format!(
                        "generator key {first} conflicts with dataset = {}",
                        path.display()
                    )));
                }
                cfg.source = DataSource::File(path);
            }
            None => cfg.source = DataSource::Generate(generator),
        }

        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a configuration file and applies the `FRAUDSTREAM_SEED`
    /// environment override if set.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        let env = std::env::var("FRAUDSTREAM_SEED").ok();
        cfg.apply_seed_override(env.as_deref())?;
        Ok(cfg)
    }

    /// Replaces the master seed with an externally supplied value, as the
    /// `FRAUDSTREAM_SEED` environment variable does.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<(), HarnessError> {
        if let Some(raw) = value {
            self.seed = raw.parse::<u64>().map_err(|_| {
                config_err(format!("bad FRAUDSTREAM_SEED value: {raw:?} (expected u64)"))
            })?;
        }
        Ok(())
    }

    /// Checks ranges and cross-field constraints.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.k == 0 {
            return Err(config_err("k must be at least 1"));
        }
        if self.q > self.k {
            return Err(config_err(format!(
                "q = {} exceeds the alert budget k = {}",
                self.q, self.k
            )));
        }
        if self.warmup == 0 {
            return Err(config_err("warmup must be at least 1 day"));
        }
        if self.delay == 0 {
            return Err(config_err("delay must be at least 1 day"));
        }
        if self.repetitions == 0 {
            return Err(config_err("repetitions must be at least 1"));
        }
        if self.feedback_window == 0 || self.delayed_window == 0 {
            return Err(config_err("training windows must be at least 1 day"));
        }
        if self.qfu_window == 0 {
            return Err(config_err("qfu_window must be at least 1 day"));
        }
        if self.smote_neighbors == 0 {
            return Err(config_err("smote_neighbors must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.ensemble_weight) {
            return Err(config_err(format!(
                "ensemble_weight must lie in [0, 1], got {}",
                self.ensemble_weight
            )));
        }
        if !(0.0..=1.0).contains(&self.mix_ratio) {
            return Err(config_err(format!(
                "mix_ratio must lie in [0, 1], got {}",
                self.mix_ratio
            )));
        }
        if !(self.uncertainty_halfwidth > 0.0 && self.uncertainty_halfwidth < 0.5) {
            return Err(config_err(format!(
                "uncertainty_halfwidth must lie in (0, 0.5), got {}",
                self.uncertainty_halfwidth
            )));
        }
        if !(self.uncertainty_center > 0.0 && self.uncertainty_center < 1.0) {
            return Err(config_err(format!(
                "uncertainty_center must lie in (0, 1), got {}",
                self.uncertainty_center
            )));
        }
        if !(self.log_floor > 0.0 && self.log_floor < 0.5) {
            return Err(config_err(format!(
                "log_floor must lie in (0, 0.5), got {}",
                self.log_floor
            )));
        }
        if !self.softmax_alpha.is_finite() {
            return Err(config_err("softmax_alpha must be finite"));
        }
        if self.forest.n_trees == 0 {
            return Err(config_err("n_trees must be at least 1"));
        }
        if self.pipeline == Pipeline::Transaction {
            for id in &self.strategies {
                if id.combining().is_some() || id.is_qfu() {
                    return Err(config_err(format!(
                        "strategy {id} requires pipeline = card"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Loads or generates the configured transaction stream. Generated
    /// streams are seeded from the master seed, so the same configuration
    /// always yields the same data.
    pub fn load_dataset(&self) -> Result<Dataset, HarnessError> {
        match &self.source {
            DataSource::File(path) => Ok(load_dataset(path)?),
            DataSource::Generate(gen) => {
                let mut gen = gen.clone();
                gen.seed = derive_seed(self.seed, &[TAG_GENERATOR]);
                Ok(generate_stream(&gen)?)
            }
        }
    }

    /// Builds the per-cell strategy settings for one (strategy,
    /// repetition) pair.
    pub fn strategy_spec(&self, id: &StrategyId, seed: u64) -> StrategySpec {
        StrategySpec {
            id: id.clone(),
            k: self.k,
            q: self.q,
            m: self.m,
            mix_ratio: self.mix_ratio,
            uncertainty_halfwidth: self.uncertainty_halfwidth,
            softmax_alpha: self.softmax_alpha,
            log_floor: self.log_floor,
            seed,
        }
    }

    /// Seed of the shared initial training set for one repetition.
    pub fn init_seed(&self, rep: u32) -> u64 {
        derive_seed(self.seed, &[TAG_INIT, u64::from(rep)])
    }

    /// Seed of the selection randomness for one (strategy, repetition)
    /// cell.
    pub fn cell_seed(&self, rep: u32, strategy_index: usize) -> u64 {
        derive_seed(
            self.seed,
            &[TAG_STRATEGY, u64::from(rep), strategy_index as u64],
        )
    }
}

/// Seed for the model trained on a given day; `role` separates the
/// feedback and delayed detectors.
pub(crate) fn model_seed(cell_seed: u64, day: u32, role: u64) -> u64 {
    derive_seed(cell_seed, &[TAG_MODEL, u64::from(day), role])
}
