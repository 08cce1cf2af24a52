//! Transaction stream: record types, dataset container, synthetic generation
//! and CSV I/O.
//!
//! A [`Dataset`] holds an ordered stream of transactions partitioned into
//! days together with hidden ground-truth labels. Simulations only ever see
//! labels through the harness oracle or the delayed-maturity clock; the
//! [`GroundTruth`] table itself is carried alongside the stream so the same
//! file can drive both simulation and evaluation.

mod generate;
mod io;

pub use generate::{generate_stream, GenConfig};
pub use io::{export_dataset, load_dataset};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Transaction class. `Fraud` serializes as label `1`, `Genuine` as `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Genuine,
    Fraud,
}

impl Class {
    pub fn is_fraud(self) -> bool {
        matches!(self, Class::Fraud)
    }

    pub fn label(self) -> u8 {
        match self {
            Class::Genuine => 0,
            Class::Fraud => 1,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Class::Genuine),
            1 => Some(Class::Fraud),
            _ => None,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Class::Genuine => write!(f, "genuine"),
            Class::Fraud => write!(f, "fraud"),
        }
    }
}

/// One transaction as the simulator sees it: identifiers, arrival position
/// and an anonymized feature vector whose first entry is the amount.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub trx_id: String,
    pub card_id: String,
    pub day: u32,
    pub seq: u32,
    pub amount: f64,
    pub features: Vec<f64>,
}

/// Hidden true labels, keyed by transaction id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    labels: HashMap<String, Class>,
}

impl GroundTruth {
    pub fn new(labels: HashMap<String, Class>) -> Self {
        Self { labels }
    }

    pub fn class_of(&self, trx_id: &str) -> Option<Class> {
        self.labels.get(trx_id).copied()
    }

    pub fn is_fraud(&self, trx_id: &str) -> bool {
        matches!(self.labels.get(trx_id), Some(Class::Fraud))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn fraud_count(&self) -> usize {
        self.labels.values().filter(|c| c.is_fraud()).count()
    }
}

/// Errors from stream construction, generation and I/O.
#[derive(Debug, Error)]
pub enum StreamError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{message} at row {row}")]
    Row { message: String, row: usize },
    #[error("{message} at row {row}, column {column}")]
    Field {
        message: String,
        row: usize,
        column: String,
    },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("day {day} out of range (dataset has {days} days)")]
    DayOutOfRange { day: u32, days: u32 },
}

/// An immutable transaction stream: all transactions sorted by `(day, seq)`,
/// with per-day slices, per-card indices and ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    transactions: Vec<Transaction>,
    day_offsets: Vec<usize>,
    card_index: HashMap<String, Vec<usize>>,
    id_index: HashMap<String, usize>,
    n_features: usize,
    truth: GroundTruth,
}

impl Dataset {
    /// Builds a dataset from raw transactions, validating the stream
    /// invariants: unique ids, unique `(day, seq)` pairs, consistent feature
    /// length, non-negative amounts mirrored in `features[0]`, and a truth
    /// table covering exactly the given transactions.
    pub fn new(mut transactions: Vec<Transaction>, truth: GroundTruth) -> Result<Self, StreamError> {
        if transactions.is_empty() {
            return Err(StreamError::Invalid("empty transaction stream".into()));
        }
        let n_features = transactions[0].features.len();
        if n_features == 0 {
            return Err(StreamError::Invalid("feature vectors are empty".into()));
        }
        transactions.sort_by(|a, b| (a.day, a.seq).cmp(&(b.day, b.seq)));

        let mut id_index = HashMap::with_capacity(transactions.len());
        for (i, t) in transactions.iter().enumerate() {
            if t.features.len() != n_features {
                return Err(StreamError::Invalid(format!(
                    "transaction {} has {} features, expected {}",
                    t.trx_id,
                    t.features.len(),
                    n_features
                )));
            }
            if !(t.amount >= 0.0) {
                return Err(StreamError::Invalid(format!(
                    "transaction {} has negative amount {}",
                    t.trx_id, t.amount
                )));
            }
            if t.amount != t.features[0] {
                return Err(StreamError::Invalid(format!(
                    "transaction {} amount {} does not match features[0] = {}",
                    t.trx_id, t.amount, t.features[0]
                )));
            }
            if id_index.insert(t.trx_id.clone(), i).is_some() {
                return Err(StreamError::Invalid(format!(
                    "duplicate trx_id {}",
                    t.trx_id
                )));
            }
            if truth.class_of(&t.trx_id).is_none() {
                return Err(StreamError::Invalid(format!(
                    "transaction {} missing from ground truth",
                    t.trx_id
                )));
            }
            if i > 0 {
                let p = &transactions[i - 1];
                if (p.day, p.seq) == (t.day, t.seq) {
                    return Err(StreamError::Invalid(format!(
                        "duplicate (day, seq) = ({}, {})",
                        t.day, t.seq
                    )));
                }
            }
        }
        if truth.len() != transactions.len() {
            return Err(StreamError::Invalid(format!(
                "ground truth has {} entries for {} transactions",
                truth.len(),
                transactions.len()
            )));
        }

        let days = transactions.last().unwrap().day + 1;
        let mut day_offsets = Vec::with_capacity(days as usize + 1);
        day_offsets.push(0);
        let mut current_day = 0u32;
        for (i, t) in transactions.iter().enumerate() {
            while current_day < t.day {
                day_offsets.push(i);
                current_day += 1;
            }
        }
        while day_offsets.len() <= days as usize {
            day_offsets.push(transactions.len());
        }

        let mut card_index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, t) in transactions.iter().enumerate() {
            card_index.entry(t.card_id.clone()).or_default().push(i);
        }

        Ok(Self {
            transactions,
            day_offsets,
            card_index,
            id_index,
            n_features,
            truth,
        })
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of days spanned, including any interior days with no traffic.
    pub fn days(&self) -> u32 {
        (self.day_offsets.len() - 1) as u32
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// All transactions of one day, ordered by `seq`.
    pub fn day_batch(&self, day: u32) -> Result<&[Transaction], StreamError> {
        if day >= self.days() {
            return Err(StreamError::DayOutOfRange {
                day,
                days: self.days(),
            });
        }
        let lo = self.day_offsets[day as usize];
        let hi = self.day_offsets[day as usize + 1];
        Ok(&self.transactions[lo..hi])
    }

    /// Indices (into `transactions()`) of all transactions on a card, in
    /// stream order. Unknown cards yield an empty slice.
    pub fn card_transactions(&self, card_id: &str) -> &[usize] {
        self.card_index.get(card_id).map_or(&[], Vec::as_slice)
    }

    pub fn transaction_by_id(&self, trx_id: &str) -> Option<&Transaction> {
        self.id_index.get(trx_id).map(|&i| &self.transactions[i])
    }
}
