//! Label bookkeeping and the budgeted ground-truth oracle.
//!
//! [`LabelLedger`] records how each transaction's label was obtained and
//! enforces the acquisition rules: a transaction is investigated at most
//! once, pseudo-labels never overwrite real labels, and checked labels
//! arriving after the verification delay supersede pseudo-labels.
//!
//! [`Oracle`] is the only component allowed to read ground truth during
//! a simulation. It charges one unit of the daily budget per call and
//! keeps a log of every id it revealed, so tests can audit that no label
//! leaked outside the budget.

use std::collections::BTreeMap;

use crate::stream::{Class, GroundTruth};

use super::HarnessError;

/// How a transaction's training label was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelState {
    /// No label yet.
    Unlabeled,
    /// An investigator checked the transaction and returned its class.
    Investigator(Class),
    /// The transaction was assumed genuine without investigation.
    PseudoGenuine,
    /// The checked label arrived through the delayed channel.
    Delayed(Class),
}

/// Ledger entry for one labeled transaction.
#[derive(Debug, Clone)]
pub struct LedgerEntry {
    pub state: LabelState,
    /// Day the current label was acquired.
    pub acquired_day: u32,
    /// Day the transaction itself occurred.
    pub trx_day: u32,
    /// True if a pseudo-label was later replaced by a checked label.
    pub superseded_pseudo: bool,
    /// False for labels deliberately dropped from training (negative
    /// feedback thinning); the label itself remains known.
    pub in_training: bool,
}

/// All labels acquired so far, keyed by transaction id.
///
/// Iteration order is the id order of the underlying `BTreeMap`, so any
/// training set assembled from the ledger is deterministic.
#[derive(Debug, Default)]
pub struct LabelLedger {
    entries: BTreeMap<String, LedgerEntry>,
}

impl LabelLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current label state of a transaction; `Unlabeled` if never seen.
    pub fn state_of(&self, trx_id: &str) -> LabelState {
        self.entries
            .get(trx_id)
            .map_or(LabelState::Unlabeled, |e| e.state)
    }

    pub fn is_labeled(&self, trx_id: &str) -> bool {
        self.entries.contains_key(trx_id)
    }

    /// Records an investigator-checked label. Fails if the transaction
    /// already carries any label: investigating twice wastes budget and
    /// pseudo-labeled transactions are never re-submitted.
    pub fn record_investigator(
        &mut self,
        trx_id: &str,
        class: Class,
        trx_day: u32,
        day: u32,
    ) -> Result<(), HarnessError> {
        if self.entries.contains_key(trx_id) {
            return Err(HarnessError::DoubleQuery(trx_id.to_string()));
        }
        self.entries.insert(
            trx_id.to_string(),
            LedgerEntry {
                state: LabelState::Investigator(class),
                acquired_day: day,
                trx_day,
                superseded_pseudo: false,
                in_training: true,
            },
        );
        Ok(())
    }

    /// Records a pseudo-genuine label. Fails if the transaction already
    /// carries any label.
    pub fn record_pseudo(&mut self, trx_id: &str, trx_day: u32, day: u32) -> Result<(), HarnessError> {
        if self.entries.contains_key(trx_id) {
            return Err(HarnessError::PseudoOverwrite(trx_id.to_string()));
        }
        self.entries.insert(
            trx_id.to_string(),
            LedgerEntry {
                state: LabelState::PseudoGenuine,
                acquired_day: day,
                trx_day,
                superseded_pseudo: false,
                in_training: true,
            },
        );
        Ok(())
    }

    /// Excludes a labeled transaction from training without forgetting
    /// its label.
    pub fn drop_from_training(&mut self, trx_id: &str) {
        if let Some(entry) = self.entries.get_mut(trx_id) {
            entry.in_training = false;
        }
    }

    /// Replaces pseudo-labels of transactions that occurred on or before
    /// `known_up_to` with their checked labels, which have become
    /// available through the delayed channel on `day`. Returns how many
    /// entries were corrected. Investigator labels are never touched.
    pub fn apply_delayed_truth(
        &mut self,
        known_up_to: u32,
        day: u32,
        truth: &GroundTruth,
    ) -> Result<usize, HarnessError> {
        let mut corrected = 0;
        for (trx_id, entry) in self.entries.iter_mut() {
            if entry.state == LabelState::PseudoGenuine && entry.trx_day <= known_up_to {
                let class = truth
                    .class_of(trx_id)
                    .ok_or_else(|| HarnessError::UnknownId(trx_id.clone()))?;
                entry.state = LabelState::Delayed(class);
                entry.acquired_day = day;
                entry.superseded_pseudo = true;
                corrected += 1;
            }
        }
        Ok(corrected)
    }

    /// All entries in transaction-id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &LedgerEntry)> {
        self.entries.iter().map(|(id, e)| (id.as_str(), e))
    }

    pub fn investigator_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| matches!(e.state, LabelState::Investigator(_)))
            .count()
    }

    /// Pseudo-labels not yet superseded by a checked label.
    pub fn active_pseudo_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| e.state == LabelState::PseudoGenuine)
            .count()
    }

    pub fn superseded_count(&self) -> usize {
        self.entries.values().filter(|e| e.superseded_pseudo).count()
    }
}

/// One budgeted ground-truth disclosure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCall {
    pub day: u32,
    /// The unit charged against the budget: a transaction id, or a card
    /// id when a whole card was checked.
    pub unit: String,
    /// Transaction ids whose labels this call revealed.
    pub revealed: Vec<String>,
}

/// Budgeted, logged access to ground-truth labels.
pub struct Oracle<'a> {
    truth: &'a GroundTruth,
    budget: usize,
    day: u32,
    calls_today: usize,
    log: Vec<OracleCall>,
}

impl<'a> Oracle<'a> {
    /// `budget` is the number of calls allowed per day.
    pub fn new(truth: &'a GroundTruth, budget: usize) -> Self {
        Self {
            truth,
            budget,
            day: 0,
            calls_today: 0,
            log: Vec::new(),
        }
    }

    /// Resets the daily call counter.
    pub fn start_day(&mut self, day: u32) {
        self.day = day;
        self.calls_today = 0;
    }

    fn charge(&mut self) -> Result<(), HarnessError> {
        if self.calls_today >= self.budget {
            return Err(HarnessError::OracleBudget {
                day: self.day,
                budget: self.budget,
            });
        }
        self.calls_today += 1;
        Ok(())
    }

    /// Reveals the checked label of one transaction, charging one call.
    pub fn label_transaction(&mut self, trx_id: &str) -> Result<Class, HarnessError> {
        self.charge()?;
        let class = self
            .truth
            .class_of(trx_id)
            .ok_or_else(|| HarnessError::UnknownId(trx_id.to_string()))?;
        self.log.push(OracleCall {
            day: self.day,
            unit: trx_id.to_string(),
            revealed: vec![trx_id.to_string()],
        });
        Ok(class)
    }

    /// Reveals the checked labels of all listed transactions of one card,
    /// charging a single call: investigators work a card at a time.
    pub fn label_card(
        &mut self,
        card_id: &str,
        trx_ids: &[&str],
    ) -> Result<Vec<Class>, HarnessError> {
        self.charge()?;
        let mut classes = Vec::with_capacity(trx_ids.len());
        for trx_id in trx_ids {
            let class = self
                .truth
                .class_of(trx_id)
                .ok_or_else(|| HarnessError::UnknownId(trx_id.to_string()))?;
            classes.push(class);
        }
        self.log.push(OracleCall {
            day: self.day,
            unit: card_id.to_string(),
            revealed: trx_ids.iter().map(|s| s.to_string()).collect(),
        });
        Ok(classes)
    }

    /// Calls spent on the current day.
    pub fn calls_today(&self) -> usize {
        self.calls_today
    }

    /// Complete disclosure log, oldest first.
    pub fn calls(&self) -> &[OracleCall] {
        &self.log
    }
}
