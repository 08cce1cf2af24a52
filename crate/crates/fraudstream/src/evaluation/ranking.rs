//! Cross-strategy comparison over a shared (repetition × day) grid.
//!
//! Every strategy must report the same grid of cells; each cell is one
//! metric value. The strategy with the highest mean is the reference, and
//! any strategy whose paired signed-rank test against it is not significant
//! joins the best set.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::records::RunRecord;
use super::wilcoxon::wilcoxon_paired;
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    TopkPrecision,
    AucPr,
    AucRoc,
    FraudAmountRatio,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::TopkPrecision,
        MetricKind::AucPr,
        MetricKind::AucRoc,
        MetricKind::FraudAmountRatio,
    ];

    pub fn extract(self, record: &RunRecord) -> f64 {
        match self {
            MetricKind::TopkPrecision => record.topk_precision,
            MetricKind::AucPr => record.auc_pr,
            MetricKind::AucRoc => record.auc_roc,
            MetricKind::FraudAmountRatio => record.fraud_amount_ratio,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MetricKind::TopkPrecision => "topk_precision",
            MetricKind::AucPr => "auc_pr",
            MetricKind::AucRoc => "auc_roc",
            MetricKind::FraudAmountRatio => "fraud_amount_ratio",
        };
        f.write_str(name)
    }
}

impl FromStr for MetricKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topk_precision" => Ok(MetricKind::TopkPrecision),
            "auc_pr" => Ok(MetricKind::AucPr),
            "auc_roc" => Ok(MetricKind::AucRoc),
            "fraud_amount_ratio" => Ok(MetricKind::FraudAmountRatio),
            other => Err(EvalError::UnknownMetric(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StrategySummary {
    pub strategy: String,
    /// Number of (repetition, day) cells behind the summary.
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Two-sided p-value of the paired test against the best strategy
    /// (1 for the best strategy itself).
    pub p_vs_best: f64,
    pub in_best_set: bool,
}

#[derive(Debug, Clone)]
pub struct RankingReport {
    pub metric: MetricKind,
    pub significance: f64,
    pub best: String,
    /// Sorted by mean descending, ties by strategy id.
    pub summaries: Vec<StrategySummary>,
}

impl RankingReport {
    pub fn best_set(&self) -> Vec<&str> {
        self.summaries
            .iter()
            .filter(|s| s.in_best_set)
            .map(|s| s.strategy.as_str())
            .collect()
    }
}

/// Linearly interpolated quantile (the common "type 7" convention) of an
/// ascending-sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups `records` by strategy over the (repetition, day) grid, picks the
/// strategy with the highest mean of `metric` (ties by id), and marks every
/// strategy whose paired test against it yields p ≥ `significance`.
///
/// Every strategy must cover exactly the same grid cells; a cell present
/// for one strategy but missing for another is a comparison error, as is a
/// duplicate cell.
pub fn rank_strategies(
    records: &[RunRecord],
    metric: MetricKind,
    significance: f64,
) -> Result<RankingReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(EvalError::InvalidRecord(format!(
            "significance {significance} outside (0, 1)"
        )));
    }

    let mut grids: BTreeMap<&str, BTreeMap<(u32, u32), f64>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        let grid = grids.entry(r.strategy.as_str()).or_default();
        if grid.insert((r.rep, r.day), metric.extract(r)).is_some() {
            return Err(EvalError::InvalidRecord(format!(
                "duplicate cell (rep {}, day {}) for strategy {}",
                r.rep, r.day, r.strategy
            )));
        }
    }

    let mut ids = grids.keys().copied();
    let first_id = ids.next().expect("records are nonempty");
    let reference = &grids[first_id];
    for (id, grid) in grids.iter().skip(1) {
        if !grid.keys().eq(reference.keys()) {
            let missing = reference.keys().find(|k| !grid.contains_key(k));
            let extra = grid.keys().find(|k| !reference.contains_key(k));
            let detail = match (missing, extra) {
                (Some((rep, day)), _) => {
                    format!("{id} is missing cell (rep {rep}, day {day}) present for {first_id}")
                }
                (_, Some((rep, day))) => {
                    format!("{id} has cell (rep {rep}, day {day}) absent for {first_id}")
                }
                (None, None) => format!("{id} and {first_id} cover different grids"),
            };
            return Err(EvalError::GridMismatch(detail));
        }
    }

    // Values in grid order, so pairing across strategies lines up cell by cell.
    let columns: BTreeMap<&str, Vec<f64>> = grids
        .iter()
        .map(|(id, grid)| (*id, grid.values().copied().collect()))
        .collect();

    let mean_of = |values: &[f64]| values.iter().sum::<f64>() / values.len() as f64;
    let mut best = first_id;
    let mut best_mean = f64::NEG_INFINITY;
    for (id, values) in &columns {
        let mean = mean_of(values);
        if mean > best_mean {
            best = id;
            best_mean = mean;
        }
    }
    let best_column = columns[best].clone();

    let mut summaries = Vec::with_capacity(columns.len());
    for (id, values) in &columns {
        let outcome = wilcoxon_paired(values, &best_column)?;
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        summaries.push(StrategySummary {
            strategy: id.to_string(),
            n: values.len(),
            mean: mean_of(values),
            median: quantile(&sorted, 0.5),
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
            p_vs_best: outcome.p_value,
            in_best_set: outcome.p_value >= significance,
        });
    }
    summaries.sort_by(|a, b| {
        b.mean
            .total_cmp(&a.mean)
            .then_with(|| a.strategy.cmp(&b.strategy))
    });

    Ok(RankingReport {
        metric,
        significance,
        best: best.to_string(),
        summaries,
    })
}

impl fmt::Display for RankingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs = self.summaries.first().map_or(0, |s| s.n);
        writeln!(f, "comparison metric   {}", self.metric)?;
        writeln!(f, "significance        {}", self.significance)?;
        writeln!(f, "pairs per strategy  {pairs}")?;
        writeln!(f, "best strategy       {}", self.best)?;
        writeln!(f, "best set            {}", self.best_set().join(", "))?;
        writeln!(f)?;
        let id_w = self
            .summaries
            .iter()
            .map(|s| s.strategy.len())
            .max()
            .unwrap_or(0)
            .max("strategy".len());
        writeln!(
            f,
            "{:<id_w$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>10}  {:>4}",
            "strategy", "mean", "median", "q1", "q3", "p_vs_best", "best"
        )?;
        for s in &self.summaries {
            writeln!(
                f,
                "{:<id_w$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>10.6}  {:>4}",
                s.strategy,
                s.mean,
                s.median,
                s.q1,
                s.q3,
                s.p_vs_best,
                if s.in_best_set { "yes" } else { "no" }
            )?;
        }
        Ok(())
    }
}

pub fn write_report(report: &RankingReport, path: &Path) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "{report}")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(strategy: &str, rep: u32, day: u32, value: f64) -> RunRecord {
        RunRecord {
            strategy: strategy.into(),
            rep,
            day,
            topk_precision: value,
            auc_pr: value,
            auc_roc: value,
            fraud_amount_ratio: value,
        }
    }

    fn grid_records(strategy: &str, values: &[f64]) -> Vec<RunRecord> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| record(strategy, (i / 3) as u32, (i % 3) as u32, v))
            .collect()
    }

    #[test]
    fn dominant_strategy_excludes_the_loser() {
        let mut records = grid_records("A", &[0.8, 0.7, 0.9, 0.85, 0.75, 0.95]);
        records.extend(grid_records("B", &[0.6, 0.5, 0.7, 0.65, 0.55, 0.75]));
        let report = rank_strategies(&records, MetricKind::AucPr, 0.05).unwrap();
        assert_eq!(report.best, "A");
        assert_eq!(report.best_set(), vec!["A"]);
        let b = report
            .summaries
            .iter()
            .find(|s| s.strategy == "B")
            .unwrap();
        assert!((b.p_vs_best - 0.03125).abs() < 1e-12);
        assert!(!b.in_best_set);
        let a = &report.summaries[0];
        assert_eq!(a.strategy, "A");
        assert_eq!(a.p_vs_best, 1.0);
        assert!(a.in_best_set);
    }

    #[test]
    fn identical_columns_are_both_best() {
        let values = [0.4, 0.5, 0.6, 0.45, 0.55, 0.65];
        let mut records = grid_records("A", &values);
        records.extend(grid_records("B", &values));
        let report = rank_strategies(&records, MetricKind::AucRoc, 0.05).unwrap();
        assert_eq!(report.best, "A");
        assert_eq!(report.best_set(), vec!["A", "B"]);
        for s in &report.summaries {
            assert_eq!(s.p_vs_best, 1.0);
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let mut records = grid_records("A", &[0.1, 0.2, 0.3]);
        records.extend(grid_records("B", &[0.1, 0.2]));
        let err = rank_strategies(&records, MetricKind::TopkPrecision, 0.05).unwrap_err();
        assert!(matches!(err, EvalError::GridMismatch(_)), "{err}");
        assert!(err.to_string().contains("rep 0, day 2"), "{err}");

        let mut dup = grid_records("A", &[0.1, 0.2, 0.3]);
        dup.push(record("A", 0, 0, 0.9));
        let err = rank_strategies(&dup, MetricKind::TopkPrecision, 0.05).unwrap_err();
        assert!(matches!(err, EvalError::InvalidRecord(_)), "{err}");
    }

    #[test]
    fn quartiles_use_linear_interpolation() {
        let records = grid_records("A", &[0.4, 0.1, 0.2, 0.3]);
        let report = rank_strategies(&records, MetricKind::FraudAmountRatio, 0.05).unwrap();
        let s = &report.summaries[0];
        assert!((s.q1 - 0.175).abs() < 1e-12);
        assert!((s.median - 0.25).abs() < 1e-12);
        assert!((s.q3 - 0.325).abs() < 1e-12);
        assert!((s.mean - 0.25).abs() < 1e-12);
        assert!(s.in_best_set);
    }

    #[test]
    fn metric_names_round_trip() {
        for kind in MetricKind::ALL {
            assert_eq!(kind.to_string().parse::<MetricKind>().unwrap(), kind);
        }
        assert!(matches!(
            "auc".parse::<MetricKind>(),
            Err(EvalError::UnknownMetric(_))
        ));
    }

    #[test]
    fn report_text_lists_summaries_and_best_set() {
        let mut records = grid_records("HRQ", &[0.2, 0.3, 0.25, 0.22, 0.28, 0.31]);
        records.extend(grid_records("SR", &[0.4, 0.5, 0.45, 0.42, 0.48, 0.51]));
        let report = rank_strategies(&records, MetricKind::AucPr, 0.05).unwrap();
        let text = report.to_string();
        assert!(text.contains("comparison metric   auc_pr"));
        assert!(text.contains("best strategy       SR"));
        assert!(text.contains("HRQ"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        write_report(&report, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn sorting_is_mean_descending_then_id() {
        let mut records = grid_records("B", &[0.5, 0.5, 0.5]);
        records.extend(grid_records("A", &[0.5, 0.5, 0.5]));
        records.extend(grid_records("C", &[0.9, 0.9, 0.9]));
        let report = rank_strategies(&records, MetricKind::AucPr, 0.05).unwrap();
        let order: Vec<&str> = report.summaries.iter().map(|s| s.strategy.as_str()).collect();
        assert_eq!(order, vec!["C", "A", "B"]);
        assert_eq!(report.best, "C");
    }
}
