//! Multi-repetition experiment runner and the pseudo-label budget sweep.
//!
//! Every (strategy, repetition) pair is an independent cell. Within a
//! repetition all strategies share the same stream, the same initial
//! training set, and the same ground truth, so they are compared in
//! identical situations. Cells run in parallel; results merge in a
//! deterministic order, so output is byte-identical for a fixed master
//! seed regardless of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::evaluation::RunRecord;
use crate::strategies::{PseudoMode, StrategyId};
use crate::stream::Dataset;

use super::config::ExperimentConfig;
use super::simulation::{init_training_indices, Simulation};
use super::HarnessError;

/// One aborted (strategy, repetition) cell; the others keep running.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub strategy: String,
    pub rep: u32,
    pub error: String,
}

/// All per-day records of a run plus any aborted cells.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub failures: Vec<CellFailure>,
}

/// Runs every configured strategy for every repetition over the whole
/// stream and collects the defined per-day metric records, sorted by
/// (strategy, repetition, day).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    ds: &Dataset,
) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    if cfg.strategies.is_empty() {
        return Err(HarnessError::Config("strategies list is empty".into()));
    }
    if cfg.warmup >= ds.days() {
        return Err(HarnessError::Config(format!(
            "warmup of {} day(s) leaves no evaluation days in a {}-day stream",
            cfg.warmup,
            ds.days()
        )));
    }

    // One shared initial training set per repetition, seeded from
    // (master seed, repetition) only, so every strategy of a repetition
    // starts from the identical set.
    let mut inits = Vec::with_capacity(cfg.repetitions as usize);
    for rep in 0..cfg.repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed(rep));
        inits.push(init_training_indices(ds, cfg.warmup, &mut rng)?);
    }

    let cells: Vec<(u32, usize)> = (0..cfg.repetitions)
        .flat_map(|rep| (0..cfg.strategies.len()).map(move |si| (rep, si)))
        .collect();

    let results: Vec<Result<Vec<RunRecord>, CellFailure>> = cells
        .par_iter()
        .map(|&(rep, si)| {
            let id = &cfg.strategies[si];
            let spec = cfg.strategy_spec(id, cfg.cell_seed(rep, si));
            let outcome = Simulation::new(ds, cfg, spec, inits[rep as usize].clone())
                .and_then(|mut sim| sim.run());
            match outcome {
                Ok(metrics) => Ok(metrics
                    .into_iter()
                    .map(|m| RunRecord {
                        strategy: id.to_string(),
                        rep,
                        day: m.day,
                        topk_precision: m.topk_precision,
                        auc_pr: m.auc_pr,
                        auc_roc: m.auc_roc,
                        fraud_amount_ratio: m.fraud_amount_ratio,
                    })
                    .collect()),
                Err(e) => {
                    log::error!("strategy {id}, repetition {rep} aborted: {e}");
                    Err(CellFailure {
                        strategy: id.to_string(),
                        rep,
                        error: e.to_string(),
                    })
                }
            }
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(mut cell_records) => records.append(&mut cell_records),
            Err(failure) => failures.push(failure),
        }
    }
    records.sort_by(|a, b| {
        a.strategy
            .cmp(&b.strategy)
            .then(a.rep.cmp(&b.rep))
            .then(a.day.cmp(&b.day))
    });
    Ok(ExperimentOutput { records, failures })
}

/// One point of the pseudo-label budget sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub m: usize,
    /// Mean top-k precision over all repetitions and evaluation days.
    pub mean_topk: f64,
    /// Number of per-day records behind the mean.
    pub records: usize,
}

/// Reruns the experiment once per pseudo-label budget value and reports
/// the mean top-k precision of each. Requires the strategy list to be
/// exactly the random self-sampling strategy, whose budget the sweep
/// varies; all runs share the master seed and therefore the same
/// per-repetition initial sets.
pub fn m_sweep(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    values: &[usize],
) -> Result<Vec<SweepPoint>, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config("no m values to sweep".into()));
    }
    let is_sr = cfg.strategies.len() == 1
        && matches!(&cfg.strategies[0], StrategyId::Sssl(PseudoMode::Random));
    if !is_sr {
        return Err(HarnessError::Config(
            "the m sweep requires strategies = SR".into(),
        ));
    }

    let mut points = Vec::with_capacity(values.len());
    for &m in values {
        let mut run_cfg = cfg.clone();
        run_cfg.m = m;
        let out = run_experiment(&run_cfg, ds)?;
        if let Some(failure) = out.failures.first() {
            return Err(HarnessError::Config(format!(
                "sweep at m = {m}: repetition {} aborted: {}",
                failure.rep, failure.error
            )));
        }
        if out.records.is_empty() {
            return Err(HarnessError::Config(format!(
                "sweep at m = {m} produced no evaluable days"
            )));
        }
        let mean = out.records.iter().map(|r| r.topk_precision).sum::<f64>()
            / out.records.len() as f64;
        points.push(SweepPoint {
            m,
            mean_topk: mean,
            records: out.records.len(),
        });
    }
    Ok(points)
}
