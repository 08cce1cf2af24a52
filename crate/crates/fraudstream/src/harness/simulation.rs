//! The daily active-learning loop for one (strategy, repetition) cell.
//!
//! Each day the simulation trains a detector on everything labeled so
//! far, scores the day's transactions, spends the investigation budget
//! according to the strategy, records the returned labels, optionally
//! pseudo-labels or synthesizes additional genuine samples, and finally
//! evaluates the day's scores against ground truth.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::evaluation::{
    auc_pr, auc_roc, fraud_amount_ratio, topk_precision, EvalError, ScoredTruth,
};
use crate::models::{
    train_balanced_forest, LabeledSample, Scorer, WeightedEnsemble,
};
use crate::strategies::{
    combine_card_scores, explore_select, hrq_select, oversample, qfu_select, qfu_update,
    srn_filter, sssl_pseudo_label, CardBag, Combining, ExploreMode, OutlierScorer, PoolItem,
    Selection, StrategySpec,
};
use crate::stream::{Class, Dataset, Transaction};
use crate::viz::{fit_pca, PcaModel, VizError};

use super::config::{model_seed, ExperimentConfig, Pipeline, PseudoTarget};
use super::ledger::{LabelLedger, LabelState, Oracle};
use super::HarnessError;

/// Roles in [`model_seed`]: the single transaction-pipeline detector,
/// and the delayed / feedback halves of the card-pipeline ensemble.
const ROLE_SINGLE: u64 = 0;
const ROLE_DELAYED: u64 = 1;
const ROLE_FEEDBACK: u64 = 2;

/// Index-level view of the initial training set: positions into
/// `ds.transactions()` with their checked classes. Useful for audits;
/// [`init_training_set`] maps it to ready-to-train samples.
pub fn init_training_indices(
    ds: &Dataset,
    warmup_days: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, Class)>, HarnessError> {
    if warmup_days >= ds.days() {
        return Err(HarnessError::Init(format!(
            "warmup of {warmup_days} day(s) covers the whole {}-day stream",
            ds.days()
        )));
    }
    let truth = ds.ground_truth();
    let mut frauds = Vec::new();
    let mut genuines = Vec::new();
    for (idx, trx) in ds.transactions().iter().enumerate() {
        if trx.day >= warmup_days {
            break;
        }
        if truth.is_fraud(&trx.trx_id) {
            frauds.push(idx);
        } else {
            genuines.push(idx);
        }
    }
    if frauds.is_empty() {
        return Err(HarnessError::Init(format!(
            "no frauds in the first {warmup_days} day(s); try a longer warmup"
        )));
    }
    if genuines.len() < frauds.len() {
        return Err(HarnessError::Init(format!(
            "cannot balance the initial set: {} frauds but only {} genuines \
             in the first {warmup_days} day(s)",
            frauds.len(),
            genuines.len()
        )));
    }
    let mut picks = rand::seq::index::sample(rng, genuines.len(), frauds.len()).into_vec();
    picks.sort_unstable();
    let mut set: Vec<(usize, Class)> = frauds.into_iter().map(|i| (i, Class::Fraud)).collect();
    set.extend(picks.into_iter().map(|p| (genuines[p], Class::Genuine)));
    Ok(set)
}

/// Builds the balanced starting training set: every fraud of the warmup
/// window plus an equal-count uniform sample of its genuines, labeled by
/// ground truth. The warmup window itself is never evaluated.
pub fn init_training_set(
    ds: &Dataset,
    warmup_days: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LabeledSample>, HarnessError> {
    let indices = init_training_indices(ds, warmup_days, rng)?;
    Ok(indices
        .into_iter()
        .map(|(idx, class)| LabeledSample::new(ds.transactions()[idx].features.clone(), class))
        .collect())
}

/// Per-day evaluation of the scores against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayMetrics {
    pub day: u32,
    pub topk_precision: f64,
    pub auc_pr: f64,
    pub auc_roc: f64,
    pub fraud_amount_ratio: f64,
}

/// Everything one simulated day produced.
#[derive(Debug, Clone)]
pub struct DayOutcome {
    pub day: u32,
    /// Unlabeled items scored today: transactions, or cards in the card
    /// pipeline.
    pub pool_size: usize,
    /// Alert and pseudo-label decisions. In the card pipeline `exploit`
    /// and `explore` hold card ids while `pseudo_genuine` holds
    /// transaction ids.
    pub selection: Selection,
    /// `None` when the pool was empty or a metric was undefined (for
    /// example a day without fraud); the day still ran in full.
    pub metrics: Option<DayMetrics>,
}

/// State of one (strategy, repetition) cell across days.
pub struct Simulation<'a> {
    ds: &'a Dataset,
    cfg: &'a ExperimentConfig,
    spec: StrategySpec,
    ledger: LabelLedger,
    oracle: Oracle<'a>,
    rng: ChaCha8Rng,
    init: Vec<(usize, Class)>,
    /// Synthetic genuine samples with the day they were generated.
    synthetic: Vec<(u32, LabeledSample)>,
    /// Daily uncertainty counters, most recent day last.
    qfu_days: VecDeque<BTreeMap<String, u64>>,
}

impl<'a> Simulation<'a> {
    /// `init` is the shared initial training set of the repetition, as
    /// produced by [`init_training_indices`].
    pub fn new(
        ds: &'a Dataset,
        cfg: &'a ExperimentConfig,
        spec: StrategySpec,
        init: Vec<(usize, Class)>,
    ) -> Result<Self, HarnessError> {
        spec.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let oracle = Oracle::new(ds.ground_truth(), cfg.k);
        Ok(Self {
            ds,
            cfg,
            spec,
            ledger: LabelLedger::new(),
            oracle,
            rng,
            init,
            synthetic: Vec::new(),
            qfu_days: VecDeque::new(),
        })
    }

    pub fn ledger(&self) -> &LabelLedger {
        &self.ledger
    }

    pub fn oracle(&self) -> &Oracle<'a> {
        &self.oracle
    }

    /// Runs all days after the warmup window and collects the defined
    /// per-day metrics.
    pub fn run(&mut self) -> Result<Vec<DayMetrics>, HarnessError> {
        let mut metrics = Vec::new();
        for day in self.cfg.warmup..self.ds.days() {
            if let Some(m) = self.step_day(day)?.metrics {
                metrics.push(m);
            }
        }
        Ok(metrics)
    }

    /// Executes one full day: label arrival, training, scoring,
    /// selection, oracle feedback, pseudo-labeling, and evaluation.
    pub fn step_day(&mut self, day: u32) -> Result<DayOutcome, HarnessError> {
        let ds = self.ds;
        let batch = ds.day_batch(day)?;
        self.oracle.start_day(day);

        // Checked labels arrive for transactions older than the
        // verification delay and supersede stale pseudo-labels.
        if day > self.cfg.delay {
            let known_up_to = day - self.cfg.delay - 1;
            self.ledger
                .apply_delayed_truth(known_up_to, day, ds.ground_truth())?;
        }

        if batch.is_empty() {
            log::info!("day {day}: no transactions, skipping");
            return Ok(DayOutcome {
                day,
                pool_size: 0,
                selection: Selection::default(),
                metrics: None,
            });
        }

        match self.cfg.pipeline {
            Pipeline::Transaction => self.transaction_day(day, batch),
            Pipeline::Card => self.card_day(day, batch),
        }
    }

    // ------------------------------------------------------------------
    // Transaction pipeline
    // ------------------------------------------------------------------

    /// Training set of the single transaction-level detector: the
    /// initial set, every ledger label marked for training, and the
    /// synthetic store. Returns the count of leading real samples so
    /// oversampling never feeds on synthetic data.
    fn transaction_training_set(&self) -> (Vec<LabeledSample>, usize) {
        let mut samples = Vec::with_capacity(
            self.init.len() + self.ledger.entries().count() + self.synthetic.len(),
        );
        for &(idx, class) in &self.init {
            samples.push(LabeledSample::new(
                self.ds.transactions()[idx].features.clone(),
                class,
            ));
        }
        for (trx_id, entry) in self.ledger.entries() {
            if !entry.in_training {
                continue;
            }
            let class = match entry.state {
                LabelState::Investigator(c) | LabelState::Delayed(c) => c,
                LabelState::PseudoGenuine => Class::Genuine,
                LabelState::Unlabeled => continue,
            };
            let trx = self
                .ds
                .transaction_by_id(trx_id)
                .expect("ledger ids come from the dataset");
            samples.push(LabeledSample::new(trx.features.clone(), class));
        }
        let real = samples.len();
        samples.extend(self.synthetic.iter().map(|(_, s)| s.clone()));
        (samples, real)
    }

    fn transaction_day(
        &mut self,
        day: u32,
        batch: &'a [Transaction],
    ) -> Result<DayOutcome, HarnessError> {
        let (training, real_len) = self.transaction_training_set();
        let mut forest_cfg = self.cfg.forest.clone();
        forest_cfg.seed = model_seed(self.spec.seed, day, ROLE_SINGLE);
        let model = train_balanced_forest(&training, &forest_cfg)?;

        let pool = self.scored_pool(batch, &model)?;
        let pool_size = pool.len();

        // Alert selection: highest risk first, then the exploration
        // budget on what is left.
        let explore_budget = self.spec.explore_budget();
        let exploit: Vec<String> = hrq_select(&pool, self.spec.k - explore_budget)
            .into_iter()
            .map(str::to_string)
            .collect();
        let explore: Vec<String> = if explore_budget > 0 {
            let taken: HashSet<&str> = exploit.iter().map(String::as_str).collect();
            let remaining: Vec<PoolItem> = pool
                .iter()
                .filter(|p| !taken.contains(p.trx_id))
                .copied()
                .collect();
            self.explore_from(day, &pool, &remaining, explore_budget)?
                .into_iter()
                .map(str::to_string)
                .collect()
        } else {
            Vec::new()
        };

        // Investigators check the alerts; their answers become labels.
        let mut genuine_feedback = Vec::new();
        for trx_id in exploit.iter().chain(explore.iter()) {
            let class = self.oracle.label_transaction(trx_id)?;
            self.ledger.record_investigator(trx_id, class, day, day)?;
            if class == Class::Genuine {
                genuine_feedback.push(trx_id.clone());
            }
        }
        self.thin_negative_feedback(&genuine_feedback);

        let pseudo_genuine = self.pseudo_label(day, &pool)?;
        self.synthesize_genuine(day, &training[..real_len])?;

        let selection = Selection {
            exploit,
            explore,
            pseudo_genuine,
        };
        let metrics = self.transaction_metrics(day, batch, &pool, &selection)?;
        Ok(DayOutcome {
            day,
            pool_size,
            selection,
            metrics,
        })
    }

    fn transaction_metrics(
        &self,
        day: u32,
        batch: &[Transaction],
        pool: &[PoolItem<'_>],
        selection: &Selection,
    ) -> Result<Option<DayMetrics>, HarnessError> {
        let truth = self.ds.ground_truth();
        let scores: Vec<f64> = pool.iter().map(|p| p.score).collect();
        let truths: Vec<bool> = pool.iter().map(|p| truth.is_fraud(p.trx_id)).collect();
        let queried: HashSet<&str> = selection.queried().collect();
        let alerted: HashSet<&str> = pool
            .iter()
            .filter(|p| queried.contains(p.trx_id))
            .map(|p| p.card_id)
            .collect();
        let transactions: Vec<(&str, f64, bool)> = batch
            .iter()
            .map(|t| (t.card_id.as_str(), t.amount, truth.is_fraud(&t.trx_id)))
            .collect();
        self.day_metrics(day, scores, truths, &alerted, &transactions)
    }

    // ------------------------------------------------------------------
    // Card pipeline
    // ------------------------------------------------------------------

    fn card_day(&mut self, day: u32, batch: &'a [Transaction]) -> Result<DayOutcome, HarnessError> {
        let scorer = self.train_ensemble(day)?;
        let pool = self.scored_pool(batch, scorer.as_ref())?;

        // Group today's per-transaction scores and features by card.
        struct CardAgg {
            scores: Vec<f64>,
            feature_sum: Vec<f64>,
            count: usize,
        }
        let n_features = self.ds.n_features();
        let mut per_card: BTreeMap<&str, CardAgg> = BTreeMap::new();
        for item in &pool {
            let agg = per_card.entry(item.card_id).or_insert_with(|| CardAgg {
                scores: Vec::new(),
                feature_sum: vec![0.0; n_features],
                count: 0,
            });
            agg.scores.push(item.score);
            for (acc, x) in agg.feature_sum.iter_mut().zip(item.features) {
                *acc += x;
            }
            agg.count += 1;
        }

        let combining = self
            .spec
            .id
            .combining()
            .unwrap_or(self.cfg.default_combining);
        let bags: Vec<CardBag> = per_card
            .iter()
            .map(|(card_id, agg)| CardBag {
                card_id: (*card_id).to_string(),
                scores: agg.scores.clone(),
            })
            .collect();
        let mut card_scores = combine_card_scores(
            &bags,
            combining,
            self.spec.softmax_alpha,
            self.spec.log_floor,
        )?;
        if combining == Combining::Logarithmic {
            // The logarithmic aggregate is an unbounded risk sum; squash
            // it monotonically into [0, 1) so ranking, uncertainty bands,
            // and metrics all see probability-like scores.
            for s in &mut card_scores {
                *s /= 1.0 + *s;
            }
        }

        let card_means: Vec<Vec<f64>> = per_card
            .values()
            .map(|agg| {
                agg.feature_sum
                    .iter()
                    .map(|s| s / agg.count as f64)
                    .collect()
            })
            .collect();
        let card_pool: Vec<PoolItem> = per_card
            .keys()
            .zip(&card_scores)
            .zip(&card_means)
            .map(|((card_id, &score), mean)| PoolItem {
                trx_id: card_id,
                card_id,
                score,
                features: mean,
            })
            .collect();
        let pool_size = card_pool.len();

        // Card selection: frequency-in-uncertainty counters, or the
        // exploit/explore split on combined scores.
        let (exploit, explore) = if self.spec.id.is_qfu() {
            // Every card of today's pool gets a counter (zero when none of
            // its scores fall in the band), so the selection always spends
            // the full min(k, pool) budget, degrading to lowest card ids
            // when nothing is uncertain.
            let mut today: BTreeMap<String, u64> = per_card
                .keys()
                .map(|card| ((*card).to_string(), 0))
                .collect();
            qfu_update(
                &mut today,
                pool.iter().map(|p| (p.card_id, p.score)),
                self.spec.uncertainty_halfwidth,
                self.cfg.uncertainty_center,
            )?;
            self.qfu_days.push_back(today);
            while self.qfu_days.len() > self.cfg.qfu_window as usize {
                self.qfu_days.pop_front();
            }
            let mut window: BTreeMap<String, u64> = BTreeMap::new();
            for counters in &self.qfu_days {
                for (card, count) in counters {
                    *window.entry(card.clone()).or_insert(0) += count;
                }
            }
            (qfu_select(&window, self.spec.k), Vec::new())
        } else {
            let explore_budget = self.spec.explore_budget();
            let exploit: Vec<String> = hrq_select(&card_pool, self.spec.k - explore_budget)
                .into_iter()
                .map(str::to_string)
                .collect();
            let explore: Vec<String> = if explore_budget > 0 {
                let taken: HashSet<&str> = exploit.iter().map(String::as_str).collect();
                let remaining: Vec<PoolItem> = card_pool
                    .iter()
                    .filter(|p| !taken.contains(p.trx_id))
                    .copied()
                    .collect();
                self.explore_from(day, &card_pool, &remaining, explore_budget)?
                    .into_iter()
                    .map(str::to_string)
                    .collect()
            } else {
                Vec::new()
            };
            (exploit, explore)
        };

        // Checking a card reveals every transaction of that card
        // observed so far; one budget unit per card.
        let mut genuine_feedback = Vec::new();
        for card_id in exploit.iter().chain(explore.iter()) {
            let observed: Vec<&Transaction> = self
                .ds
                .card_transactions(card_id)
                .iter()
                .map(|&idx| &self.ds.transactions()[idx])
                .filter(|t| t.day <= day && !self.ledger.is_labeled(&t.trx_id))
                .collect();
            let ids: Vec<&str> = observed.iter().map(|t| t.trx_id.as_str()).collect();
            let classes = self.oracle.label_card(card_id, &ids)?;
            for (trx, class) in observed.iter().zip(classes) {
                self.ledger
                    .record_investigator(&trx.trx_id, class, trx.day, day)?;
                if class == Class::Genuine {
                    genuine_feedback.push(trx.trx_id.clone());
                }
            }
        }
        self.thin_negative_feedback(&genuine_feedback);

        let pseudo_genuine = self.pseudo_label(day, &pool)?;
        if self.spec.oversample_budget() > 0 {
            // Synthesize from real samples of the target training set;
            // while no genuine feedback exists yet, fall back to the
            // delayed set so the generator never runs dry.
            let (delayed_real, feedback_real) = self.card_training_sets(day)?;
            let target = match self.cfg.pseudo_target {
                PseudoTarget::Feedback | PseudoTarget::Both => &feedback_real,
                PseudoTarget::Delayed => &delayed_real,
            };
            let source = if target.iter().any(|s| !s.class.is_fraud()) {
                target
            } else {
                &delayed_real
            };
            self.synthesize_genuine(day, source)?;
        }

        let selection = Selection {
            exploit,
            explore,
            pseudo_genuine,
        };

        // Card-level evaluation: a card counts as fraudulent if any of
        // its transactions today is a fraud.
        let truth = self.ds.ground_truth();
        let fraud_cards: HashSet<&str> = batch
            .iter()
            .filter(|t| truth.is_fraud(&t.trx_id))
            .map(|t| t.card_id.as_str())
            .collect();
        let card_truths: Vec<bool> = per_card
            .keys()
            .map(|card| fraud_cards.contains(*card))
            .collect();
        let alerted: HashSet<&str> = selection.queried().collect();
        let transactions: Vec<(&str, f64, bool)> = batch
            .iter()
            .map(|t| (t.card_id.as_str(), t.amount, truth.is_fraud(&t.trx_id)))
            .collect();
        let metrics = self.day_metrics(day, card_scores, card_truths, &alerted, &transactions)?;

        Ok(DayOutcome {
            day,
            pool_size,
            selection,
            metrics,
        })
    }

    /// Assembles the two card-pipeline training sets: the delayed set
    /// (initial samples plus checked labels of the delayed window) and
    /// the feedback set (investigator answers of the feedback window
    /// plus, per configuration, active pseudo-labels). Synthetic samples
    /// are not included; [`Self::train_ensemble`] appends them so that
    /// oversampling sources stay purely real.
    fn card_training_sets(
        &self,
        day: u32,
    ) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>), HarnessError> {
        let ds = self.ds;
        let truth = ds.ground_truth();

        let mut delayed = Vec::new();
        for &(idx, class) in &self.init {
            delayed.push(LabeledSample::new(
                ds.transactions()[idx].features.clone(),
                class,
            ));
        }
        // Checked labels exist for all transactions older than the
        // delay; keep the most recent `delayed_window` such days.
        if day > self.cfg.delay {
            let known_up_to = day - self.cfg.delay - 1;
            let window_start = known_up_to.saturating_sub(self.cfg.delayed_window - 1);
            for d in window_start..=known_up_to {
                for trx in ds.day_batch(d)? {
                    let class = if truth.is_fraud(&trx.trx_id) {
                        Class::Fraud
                    } else {
                        Class::Genuine
                    };
                    delayed.push(LabeledSample::new(trx.features.clone(), class));
                }
            }
        }

        let mut feedback = Vec::new();
        let feedback_start = day.saturating_sub(self.cfg.feedback_window - 1);
        let pseudo_to_feedback = matches!(
            self.cfg.pseudo_target,
            PseudoTarget::Feedback | PseudoTarget::Both
        );
        let pseudo_to_delayed = matches!(
            self.cfg.pseudo_target,
            PseudoTarget::Delayed | PseudoTarget::Both
        );
        for (trx_id, entry) in self.ledger.entries() {
            if !entry.in_training || entry.acquired_day < feedback_start {
                continue;
            }
            match entry.state {
                LabelState::Investigator(class) => {
                    let trx = ds
                        .transaction_by_id(trx_id)
                        .expect("ledger ids come from the dataset");
                    feedback.push(LabeledSample::new(trx.features.clone(), class));
                }
                LabelState::PseudoGenuine => {
                    let trx = ds
                        .transaction_by_id(trx_id)
                        .expect("ledger ids come from the dataset");
                    if pseudo_to_feedback {
                        feedback.push(LabeledSample::new(trx.features.clone(), Class::Genuine));
                    }
                    if pseudo_to_delayed {
                        delayed.push(LabeledSample::new(trx.features.clone(), Class::Genuine));
                    }
                }
                // Superseded pseudo-labels re-enter through the delayed
                // day scan above; nothing to add here.
                LabelState::Delayed(_) | LabelState::Unlabeled => {}
            }
        }

        Ok((delayed, feedback))
    }

    /// Trains the delayed/feedback pair and blends them; before any
    /// usable feedback exists the delayed model scores alone.
    fn train_ensemble(&self, day: u32) -> Result<Box<dyn Scorer>, HarnessError> {
        let (mut delayed_set, mut feedback_set) = self.card_training_sets(day)?;

        // Synthetic genuine samples join their target set and age out
        // with its window.
        let synth_start = match self.cfg.pseudo_target {
            PseudoTarget::Feedback | PseudoTarget::Both => {
                day.saturating_sub(self.cfg.feedback_window - 1)
            }
            PseudoTarget::Delayed => day.saturating_sub(self.cfg.delayed_window - 1),
        };
        for (made_day, sample) in &self.synthetic {
            if *made_day < synth_start {
                continue;
            }
            match self.cfg.pseudo_target {
                PseudoTarget::Feedback | PseudoTarget::Both => feedback_set.push(sample.clone()),
                PseudoTarget::Delayed => delayed_set.push(sample.clone()),
            }
        }

        let mut delayed_cfg = self.cfg.forest.clone();
        delayed_cfg.seed = model_seed(self.spec.seed, day, ROLE_DELAYED);
        let delayed = train_balanced_forest(&delayed_set, &delayed_cfg)?;

        let classes: HashSet<bool> = feedback_set.iter().map(|s| s.class.is_fraud()).collect();
        if feedback_set.is_empty() || classes.len() < 2 {
            log::info!(
                "day {day}: no two-class feedback yet, scoring with the delayed model only"
            );
            return Ok(Box::new(delayed));
        }
        let mut feedback_cfg = self.cfg.forest.clone();
        feedback_cfg.seed = model_seed(self.spec.seed, day, ROLE_FEEDBACK);
        let feedback = train_balanced_forest(&feedback_set, &feedback_cfg)?;
        let ensemble =
            WeightedEnsemble::with_models(self.cfg.ensemble_weight, delayed, feedback)?;
        Ok(Box::new(ensemble))
    }

    // ------------------------------------------------------------------
    // Shared helpers
    // ------------------------------------------------------------------

    /// Scores today's unlabeled transactions.
    fn scored_pool<'b>(
        &self,
        batch: &'b [Transaction],
        model: &dyn Scorer,
    ) -> Result<Vec<PoolItem<'b>>, HarnessError> {
        let mut pool = Vec::with_capacity(batch.len());
        for trx in batch {
            if self.ledger.is_labeled(&trx.trx_id) {
                continue;
            }
            let score = model.score(&trx.features)?;
            pool.push(PoolItem {
                trx_id: &trx.trx_id,
                card_id: &trx.card_id,
                score,
                features: &trx.features,
            });
        }
        Ok(pool)
    }

    /// Spends the exploration budget on `remaining`. The outlier mode
    /// projects today's full pool; if the pool is too small to fit the
    /// projection, exploration falls back to random picks.
    fn explore_from<'b>(
        &mut self,
        day: u32,
        full_pool: &[PoolItem<'b>],
        remaining: &[PoolItem<'b>],
        budget: usize,
    ) -> Result<Vec<&'b str>, HarnessError> {
        let mode = self
            .spec
            .id
            .explore_mode()
            .expect("explore_from is only called for exploring strategies");
        let (mode, pca): (ExploreMode, Option<PcaModel>) = if mode == ExploreMode::PcaOutlier {
            let features: Vec<&[f64]> = full_pool.iter().map(|p| p.features).collect();
            match fit_pca(&features) {
                Ok(model) => (mode, Some(model)),
                Err(VizError::TooFewSamples { .. }) => {
                    log::warn!(
                        "day {day}: pool too small for an outlier projection, \
                         exploring randomly"
                    );
                    (ExploreMode::Random, None)
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            (mode, None)
        };
        Ok(explore_select(
            mode,
            remaining,
            budget,
            self.spec.mix_ratio,
            self.cfg.uncertainty_center,
            pca.as_ref().map(|m| m as &dyn OutlierScorer),
            &mut self.rng,
        )?)
    }

    /// Drops part of today's genuine investigator answers from training,
    /// keeping the retained fraction configured by the strategy.
    fn thin_negative_feedback(&mut self, genuine_feedback: &[String]) {
        let p = self.spec.id.retained_negatives();
        if genuine_feedback.is_empty() || p >= 1.0 {
            return;
        }
        let retained: HashSet<String> = srn_filter(genuine_feedback, p, &mut self.rng)
            .into_iter()
            .collect();
        for trx_id in genuine_feedback {
            if !retained.contains(trx_id) {
                self.ledger.drop_from_training(trx_id);
            }
        }
    }

    /// Marks up to `m` of today's untouched transactions as genuine
    /// without investigating them.
    fn pseudo_label(&mut self, day: u32, pool: &[PoolItem<'_>]) -> Result<Vec<String>, HarnessError> {
        let budget = self.spec.pseudo_budget();
        let Some(mode) = self.spec.id.pseudo_mode() else {
            return Ok(Vec::new());
        };
        let remaining: Vec<PoolItem> = pool
            .iter()
            .filter(|p| !self.ledger.is_labeled(p.trx_id))
            .copied()
            .collect();
        let picked = sssl_pseudo_label(
            mode,
            &remaining,
            budget,
            self.spec.mix_ratio,
            self.cfg.uncertainty_center,
            &mut self.rng,
        );
        let mut ids = Vec::with_capacity(picked.len());
        for trx_id in picked {
            let trx = self
                .ds
                .transaction_by_id(trx_id)
                .expect("pool ids come from the dataset");
            self.ledger.record_pseudo(trx_id, trx.day, day)?;
            ids.push(trx_id.to_string());
        }
        Ok(ids)
    }

    /// Adds up to `m` synthetic genuine samples interpolated or resampled
    /// from the given real samples' genuine part.
    fn synthesize_genuine(
        &mut self,
        day: u32,
        real_samples: &[LabeledSample],
    ) -> Result<(), HarnessError> {
        let budget = self.spec.oversample_budget();
        let Some(mode) = self.spec.id.oversample_mode() else {
            return Ok(());
        };
        if budget == 0 {
            return Ok(());
        }
        let source: Vec<LabeledSample> = real_samples
            .iter()
            .filter(|s| !s.class.is_fraud())
            .cloned()
            .collect();
        let extra = oversample(
            mode,
            &source,
            budget,
            self.cfg.smote_neighbors,
            &mut self.rng,
        )?;
        self.synthetic.extend(extra.into_iter().map(|s| (day, s)));
        Ok(())
    }

    /// Computes the day's metrics, or `None` (with a log notice) when a
    /// metric is undefined for this day's pool. The conditions only
    /// depend on the day's data, never on the strategy, so every
    /// strategy skips the same days.
    fn day_metrics(
        &self,
        day: u32,
        scores: Vec<f64>,
        truths: Vec<bool>,
        alerted_cards: &HashSet<&str>,
        transactions: &[(&str, f64, bool)],
    ) -> Result<Option<DayMetrics>, HarnessError> {
        let st = ScoredTruth::new(scores, truths)?;
        let roc = match auc_roc(&st) {
            Ok(v) => v,
            Err(EvalError::SingleClass(which)) => {
                log::warn!("day {day}: only {which} items in the pool, metrics skipped");
                return Ok(None);
            }
            Err(e) => return Err(e.into()),
        };
        let pr = auc_pr(&st)?;
        let topk = topk_precision(&st, self.spec.k)?;
        let amount = match fraud_amount_ratio(alerted_cards, transactions) {
            Ok(v) => v,
            Err(EvalError::ZeroVolume) => {
                log::warn!("day {day}: zero transaction volume, metrics skipped");
                return Ok(None);
            }
            Err(e) => return Err(e.into()),
        };
        Ok(Some(DayMetrics {
            day,
            topk_precision: topk,
            auc_pr: pr,
            auc_roc: roc,
            fraud_amount_ratio: amount,
        }))
    }
}
