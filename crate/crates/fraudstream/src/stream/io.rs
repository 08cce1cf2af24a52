//! Dataset CSV serialization.
//!
//! Schema: `day,seq,trx_id,card_id,amount,f1,...,f{n-1},label` with LF line
//! endings and label 1 for fraud. The amount doubles as the first feature
//! and is stored once. Floats are written with Rust's shortest round-trip
//! formatting, so export → load → export is byte-identical.
//!
//! Row numbers in errors are 1-based over data rows (the header is row 0).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Class, Dataset, GroundTruth, StreamError, Transaction};

/// Writes a dataset to `path` in the stream CSV schema.
pub fn export_dataset(dataset: &Dataset, path: &Path) -> Result<(), StreamError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let n = dataset.n_features();
    write!(w, "day,seq,trx_id,card_id,amount")?;
    for i in 1..n {
        write!(w, ",f{i}")?;
    }
    w.write_all(b",label\n")?;
    for t in dataset.transactions() {
        let label = dataset
            .ground_truth()
            .class_of(&t.trx_id)
            .expect("dataset invariant: truth covers all transactions")
            .label();
        write!(w, "{},{},{},{},{}", t.day, t.seq, t.trx_id, t.card_id, t.amount)?;
        for v in &t.features[1..] {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{label}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`export_dataset`] (or by hand in that
/// schema), validating the header, field counts and value ranges.
pub fn load_dataset(path: &Path) -> Result<Dataset, StreamError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| StreamError::Header("empty file".into()))??;
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    let fixed = ["day", "seq", "trx_id", "card_id", "amount"];
    if cols.len() < fixed.len() + 1 {
        return Err(StreamError::Header(format!(
            "expected at least {} columns, found {}",
            fixed.len() + 1,
            cols.len()
        )));
    }
    for (i, name) in fixed.iter().enumerate() {
        if cols[i] != *name {
            return Err(StreamError::Header(format!(
                "expected column {} to be '{}', found '{}'",
                i, name, cols[i]
            )));
        }
    }
    if cols.last() != Some(&"label") {
        return Err(StreamError::Header("last column must be 'label'".into()));
    }
    let feature_cols = &cols[fixed.len()..cols.len() - 1];
    for (i, name) in feature_cols.iter().enumerate() {
        let expected = format!("f{}", i + 1);
        if *name != expected {
            return Err(StreamError::Header(format!(
                "expected feature column '{expected}', found '{name}'"
            )));
        }
    }
    let n_features = feature_cols.len() + 1;
    let n_cols = cols.len();

    let mut transactions = Vec::new();
    let mut labels = std::collections::HashMap::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_cols {
            return Err(StreamError::Row {
                message: format!("expected {} fields, found {}", n_cols, fields.len()),
                row,
            });
        }
        let parse_u32 = |v: &str, col: &str| -> Result<u32, StreamError> {
            v.parse().map_err(|_| StreamError::Field {
                message: format!("invalid integer '{v}'"),
                row,
                column: col.into(),
            })
        };
        let parse_f64 = |v: &str, col: &str| -> Result<f64, StreamError> {
            let x: f64 = v.parse().map_err(|_| StreamError::Field {
                message: format!("invalid number '{v}'"),
                row,
                column: col.into(),
            })?;
            if !x.is_finite() {
                return Err(StreamError::Field {
                    message: format!("non-finite number '{v}'"),
                    row,
                    column: col.into(),
                });
            }
            Ok(x)
        };

        let day = parse_u32(fields[0], "day")?;
        let seq = parse_u32(fields[1], "seq")?;
        let trx_id = fields[2].to_string();
        if trx_id.is_empty() {
            return Err(StreamError::Field {
                message: "empty trx_id".into(),
                row,
                column: "trx_id".into(),
            });
        }
        if !seen.insert(trx_id.clone()) {
            return Err(StreamError::Row {
                message: "duplicate trx_id".into(),
                row,
            });
        }
        let card_id = fields[3].to_string();
        if card_id.is_empty() {
            return Err(StreamError::Field {
                message: "empty card_id".into(),
                row,
                column: "card_id".into(),
            });
        }
        let amount = parse_f64(fields[4], "amount")?;
        if amount < 0.0 {
            return Err(StreamError::Field {
                message: format!("negative amount '{amount}'"),
                row,
                column: "amount".into(),
            });
        }
        let mut features = Vec::with_capacity(n_features);
        features.push(amount);
        for (j, v) in fields[5..n_cols - 1].iter().enumerate() {
            features.push(parse_f64(v, &format!("f{}", j + 1))?);
        }
        let label_field = fields[n_cols - 1];
        let class = label_field
            .parse::<u8>()
            .ok()
            .and_then(Class::from_label)
            .ok_or_else(|| StreamError::Field {
                message: format!("label must be 0 or 1, found '{label_field}'"),
                row,
                column: "label".into(),
            })?;
        labels.insert(trx_id.clone(), class);
        transactions.push(Transaction {
            trx_id,
            card_id,
            day,
            seq,
            amount,
            features,
        });
    }

    Dataset::new(transactions, GroundTruth::new(labels))
}

#[cfg(test)]
mod tests {
    use super::super::{generate_stream, GenConfig};
    use super::*;
    use std::io::Read;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("fraudstream-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let cfg = GenConfig {
            days: 3,
            transactions_per_day: 50,
            fraud_rate: 0.05,
            n_features: 5,
            seed: 21,
            ..GenConfig::default()
        };
        let ds = generate_stream(&cfg).unwrap();
        let p1 = tmp("rt1.csv");
        let p2 = tmp("rt2.csv");
        export_dataset(&ds, &p1).unwrap();
        let loaded = load_dataset(&p1).unwrap();
        assert_eq!(loaded.transactions(), ds.transactions());
        assert_eq!(loaded.ground_truth(), ds.ground_truth());
        export_dataset(&loaded, &p2).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        File::open(&p1).unwrap().read_to_end(&mut a).unwrap();
        File::open(&p2).unwrap().read_to_end(&mut b).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains(&b'\r'));
    }

    #[test]
    fn duplicate_trx_id_reports_the_row() {
        let p = tmp("dup.csv");
        std::fs::write(
            &p,
            "day,seq,trx_id,card_id,amount,f1,label\n\
             0,0,t1,c1,10,0.5,0\n\
             0,1,t2,c1,11,0.6,0\n\
             0,2,t1,c2,12,0.7,1\n",
        )
        .unwrap();
        let err = load_dataset(&p).unwrap_err();
        assert_eq!(err.to_string(), "duplicate trx_id at row 3");
    }

    #[test]
    fn missing_column_is_rejected() {
        let p = tmp("missing.csv");
        std::fs::write(&p, "day,seq,trx_id,amount,f1,label\n").unwrap();
        let err = load_dataset(&p).unwrap_err();
        assert!(err.to_string().contains("card_id"));
    }

    #[test]
    fn wrong_field_count_is_rejected() {
        let p = tmp("short.csv");
        std::fs::write(
            &p,
            "day,seq,trx_id,card_id,amount,f1,label\n0,0,t1,c1,10,0\n",
        )
        .unwrap();
        let err = load_dataset(&p).unwrap_err();
        assert!(err.to_string().contains("expected 7 fields"));
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn bad_label_is_rejected_with_column() {
        let p = tmp("label.csv");
        std::fs::write(
            &p,
            "day,seq,trx_id,card_id,amount,f1,label\n0,0,t1,c1,10,0.5,2\n",
        )
        .unwrap();
        let err = load_dataset(&p).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("label"), "{msg}");
        assert!(msg.contains("row 1"), "{msg}");
    }

    #[test]
    fn bad_number_is_rejected_with_column() {
        let p = tmp("num.csv");
        std::fs::write(
            &p,
            "day,seq,trx_id,card_id,amount,f1,label\n0,0,t1,c1,ten,0.5,0\n",
        )
        .unwrap();
        let err = load_dataset(&p).unwrap_err();
        assert!(err.to_string().contains("column amount"));
    }

    #[test]
    fn negative_amount_is_rejected() {
        let p = tmp("neg.csv");
        std::fs::write(
            &p,
            "day,seq,trx_id,card_id,amount,f1,label\n0,0,t1,c1,-1,0.5,0\n",
        )
        .unwrap();
        assert!(load_dataset(&p).is_err());
    }
}
