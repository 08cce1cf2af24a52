//! Score-distribution diagnostics: how many transactions land in each
//! score band, and how fraudulent each band really is.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::VizError;

/// One equal-width score band over [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBin {
    pub lo: f64,
    pub hi: f64,
    pub total: usize,
    pub genuine: usize,
    pub fraud: usize,
    /// fraud / total, or None when the bin is empty.
    pub fraud_proportion: Option<f64>,
}

/// Buckets scores into `bins` equal-width bands (a score of exactly 1 falls
/// in the last band) and tallies the class mix per band.
pub fn score_report(
    scores: &[f64],
    truths: &[bool],
    bins: usize,
) -> Result<Vec<ScoreBin>, VizError> {
    if scores.is_empty() {
        return Err(VizError::EmptyInput);
    }
    if scores.len() != truths.len() {
        return Err(VizError::LengthMismatch {
            a: scores.len(),
            b: truths.len(),
        });
    }
    if bins == 0 {
        return Err(VizError::BadBins);
    }
    let mut report: Vec<ScoreBin> = (0..bins)
        .map(|i| ScoreBin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            total: 0,
            genuine: 0,
            fraud: 0,
            fraud_proportion: None,
        })
        .collect();
    for (&score, &is_fraud) in scores.iter().zip(truths) {
        if !(0.0..=1.0).contains(&score) {
            return Err(VizError::ScoreOutOfRange(score));
        }
        let idx = ((score * bins as f64) as usize).min(bins - 1);
        let bin = &mut report[idx];
        bin.total += 1;
        if is_fraud {
            bin.fraud += 1;
        } else {
            bin.genuine += 1;
        }
    }
    for bin in &mut report {
        if bin.total > 0 {
            bin.fraud_proportion = Some(bin.fraud as f64 / bin.total as f64);
        }
    }
    Ok(report)
}

/// CSV form: `bin_lo,bin_hi,total,genuine,fraud,fraud_proportion`, with the
/// proportion column empty for empty bins.
pub fn write_score_report(report: &[ScoreBin], path: &Path) -> Result<(), VizError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "bin_lo,bin_hi,total,genuine,fraud,fraud_proportion")?;
    for bin in report {
        let proportion = bin
            .fraud_proportion
            .map(|p| p.to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            bin.lo, bin.hi, bin.total, bin.genuine, bin.fraud, proportion
        )?;
    }
    w.flush()?;
    Ok(())
}
