//! Experiment orchestration: configuration, label bookkeeping, the daily
//! simulation loop, and multi-repetition experiment runs.
//!
//! The harness wires the other modules together. Each simulated day it
//! trains a detector on everything labeled so far, scores the day's
//! transactions, spends a fixed investigation budget according to the
//! configured strategy, and folds the returned labels back into the
//! training set. Ground truth is only reachable through two audited
//! channels: the [`Oracle`] (budgeted, logged) and the per-day metrics.

mod config;
mod ledger;
mod simulation;

mod experiment;

pub use config::{DataSource, ExperimentConfig, Pipeline, PseudoTarget};
pub use experiment::{m_sweep, run_experiment, CellFailure, ExperimentOutput, SweepPoint};
pub use ledger::{LabelLedger, LabelState, LedgerEntry, Oracle, OracleCall};
pub use simulation::{
    init_training_indices, init_training_set, DayMetrics, DayOutcome, Simulation,
};

use crate::evaluation::EvalError;
use crate::models::ModelError;
use crate::strategies::StrategyError;
use crate::stream::StreamError;
use crate::viz::VizError;

/// Errors raised while configuring or running experiments.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// A configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),
    /// Building the initial training set failed.
    #[error("initialization error: {0}")]
    Init(String),
    /// A transaction was submitted for investigation more than once.
    #[error("transaction {0} already carries an investigator label")]
    DoubleQuery(String),
    /// A pseudo-label was requested for an already-labeled transaction.
    #[error("transaction {0} is already labeled; refusing to pseudo-label")]
    PseudoOverwrite(String),
    /// The daily investigation budget was exhausted.
    #[error("oracle budget of {budget} calls exceeded on day {day}")]
    OracleBudget { day: u32, budget: usize },
    /// The oracle was asked about an id absent from the ground truth.
    #[error("unknown id {0} submitted to the oracle")]
    UnknownId(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Viz(#[from] VizError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
