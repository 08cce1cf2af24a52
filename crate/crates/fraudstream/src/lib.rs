//! Streaming active-learning simulator and strategy library for card fraud
//! detection.
//!
//! The crate models the daily life of a fraud detection system: every day a
//! batch of transactions arrives, a classifier scores them, a small number of
//! alerts is handed to human investigators, and their feedback (plus labels
//! that mature after a fixed delay) feeds the next day's model. The
//! interesting question is *which* transactions to show the investigators,
//! and the [`strategies`] module implements a catalogue of answers: pure
//! exploitation of the riskiest scores, exploration mixes, semi-supervised
//! pseudo-labelling, selective retention of negative feedback, oversampling,
//! and card-level aggregation with query-frequency tracking.
//!
//! Module map:
//!
//! * [`stream`] — transaction records, synthetic stream generation, CSV I/O.
//! * [`models`] — decision trees, balanced random forests, weighted ensemble.
//! * [`strategies`] — alert selection, pseudo-labelling, oversampling,
//!   card-score combining.
//! * [`evaluation`] — ranking metrics, paired significance tests, strategy
//!   comparison reports.
//! * [`harness`] — label ledger, labelling oracle, day loop and experiment
//!   runner.
//! * [`viz`] — PCA projections, density grids and score diagnostics.

pub mod evaluation;
pub mod harness;
pub mod models;
pub mod seeding;
pub mod strategies;
pub mod stream;
pub mod viz;
