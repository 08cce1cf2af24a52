//! Per-(strategy, repetition, day) metric records and their CSV form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::EvalError;

pub const RECORD_HEADER: &str = "strategy,rep,day,topk_precision,auc_pr,auc_roc,fraud_amount_ratio";

/// One day of one repetition of one strategy, fully summarized.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub strategy: String,
    pub rep: u32,
    pub day: u32,
    pub topk_precision: f64,
    pub auc_pr: f64,
    pub auc_roc: f64,
    pub fraud_amount_ratio: f64,
}

impl RunRecord {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, v) in [
            ("topk_precision", self.topk_precision),
            ("auc_pr", self.auc_pr),
            ("auc_roc", self.auc_roc),
            ("fraud_amount_ratio", self.fraud_amount_ratio),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(EvalError::InvalidRecord(format!(
                    "{name} = {v} outside [0, 1] (strategy {}, rep {}, day {})",
                    self.strategy, self.rep, self.day
                )));
            }
        }
        if self.strategy.is_empty() || self.strategy.contains(',') {
            return Err(EvalError::InvalidRecord(format!(
                "bad strategy id '{}'",
                self.strategy
            )));
        }
        Ok(())
    }
}

/// Writes records in the given order; floats use shortest round-trip
/// formatting so rewriting a loaded table is byte-identical.
pub fn write_records(records: &[RunRecord], path: &Path) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{RECORD_HEADER}")?;
    for r in records {
        r.validate()?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.strategy, r.rep, r.day, r.topk_precision, r.auc_pr, r.auc_roc, r.fraud_amount_ratio
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, EvalError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| EvalError::InvalidRecord("empty records file".into()))??;
    if header.trim_end_matches('\r') != RECORD_HEADER {
        return Err(EvalError::InvalidRecord(format!(
            "unexpected header '{header}'"
        )));
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(EvalError::InvalidRecord(format!(
                "expected 7 fields at row {row}, found {}",
                fields.len()
            )));
        }
        let int = |v: &str, name: &str| -> Result<u32, EvalError> {
            v.parse()
                .map_err(|_| EvalError::InvalidRecord(format!("bad {name} '{v}' at row {row}")))
        };
        let num = |v: &str, name: &str| -> Result<f64, EvalError> {
            v.parse()
                .map_err(|_| EvalError::InvalidRecord(format!("bad {name} '{v}' at row {row}")))
        };
        let record = RunRecord {
            strategy: fields[0].to_string(),
            rep: int(fields[1], "rep")?,
            day: int(fields[2], "day")?,
            topk_precision: num(fields[3], "topk_precision")?,
            auc_pr: num(fields[4], "auc_pr")?,
            auc_roc: num(fields[5], "auc_roc")?,
            fraud_amount_ratio: num(fields[6], "fraud_amount_ratio")?,
        };
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(strategy: &str, rep: u32, day: u32, v: f64) -> RunRecord {
        RunRecord {
            strategy: strategy.into(),
            rep,
            day,
            topk_precision: v,
            auc_pr: v,
            auc_roc: v,
            fraud_amount_ratio: v,
        }
    }

    #[test]
    fn records_round_trip_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("r1.csv");
        let p2 = dir.path().join("r2.csv");
        let records = vec![
            record("HRQ", 0, 7, 0.25),
            record("SR", 0, 7, 1.0 / 3.0),
            record("SR", 1, 8, 0.625),
        ];
        write_records(&records, &p1).unwrap();
        let loaded = read_records(&p1).unwrap();
        assert_eq!(loaded, records);
        write_records(&loaded, &p2).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap()
        );
    }

    #[test]
    fn out_of_range_metrics_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        let bad = vec![record("HRQ", 0, 0, 1.5)];
        assert!(write_records(&bad, &p).is_err());
        std::fs::write(
            &p,
            format!("{RECORD_HEADER}\nHRQ,0,0,0.5,0.5,oops,0.5\n"),
        )
        .unwrap();
        assert!(read_records(&p).is_err());
        std::fs::write(&p, "wrong,header\n").unwrap();
        assert!(read_records(&p).is_err());
    }
}
