//! Detection metrics and strategy comparison.
//!
//! Daily model quality is summarized four ways: precision over the alerted
//! top-k, ranking quality over the whole day (AUC-ROC and AUC-PR), and the
//! fraction of the day's transacted money caught by the alerts. Strategies
//! are then compared over the full (repetition × day) grid with a paired
//! Wilcoxon signed-rank test, mirroring how an analyst would ask "is this
//! selection policy actually better, day over day?".

mod ranking;
mod records;
mod wilcoxon;

pub use ranking::{rank_strategies, write_report, MetricKind, RankingReport, StrategySummary};
pub use records::{read_records, write_records, RunRecord};
pub use wilcoxon::{wilcoxon_paired, WilcoxonOutcome};

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("k must be >= 1")]
    BadK,
    #[error("{0} needs both classes present")]
    SingleClass(&'static str),
    #[error("no positive instances")]
    NoPositives,
    #[error("zero daily volume")]
    ZeroVolume,
    #[error("paired lists differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("strategy grids differ: {0}")]
    GridMismatch(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parallel scores and true labels (optionally amounts) for one evaluation
/// slice, usually a day.
#[derive(Debug, Clone)]
pub struct ScoredTruth {
    scores: Vec<f64>,
    truths: Vec<bool>,
    amounts: Option<Vec<f64>>,
}

impl ScoredTruth {
    pub fn new(scores: Vec<f64>, truths: Vec<bool>) -> Result<Self, EvalError> {
        for &s in &scores {
            if !(0.0..=1.0).contains(&s) {
                return Err(EvalError::ScoreOutOfRange(s));
            }
        }
        if scores.len() != truths.len() {
            return Err(EvalError::LengthMismatch {
                a: scores.len(),
                b: truths.len(),
            });
        }
        Ok(Self {
            scores,
            truths,
            amounts: None,
        })
    }

    pub fn with_amounts(
        scores: Vec<f64>,
        truths: Vec<bool>,
        amounts: Vec<f64>,
    ) -> Result<Self, EvalError> {
        if amounts.len() != scores.len() {
            return Err(EvalError::LengthMismatch {
                a: scores.len(),
                b: amounts.len(),
            });
        }
        let mut st = Self::new(scores, truths)?;
        st.amounts = Some(amounts);
        Ok(st)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn truths(&self) -> &[bool] {
        &self.truths
    }

    pub fn positives(&self) -> usize {
        self.truths.iter().filter(|&&t| t).count()
    }
}

/// Fraction of true positives among the `k` highest-scoring items; ties at
/// the cutoff are broken by stable input order. Uses all items when fewer
/// than `k` exist.
pub fn topk_precision(st: &ScoredTruth, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::BadK);
    }
    if st.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut order: Vec<usize> = (0..st.len()).collect();
    // Stable sort: equal scores keep their input (stream) order.
    order.sort_by(|&a, &b| st.scores[b].total_cmp(&st.scores[a]));
    let k_used = k.min(st.len());
    let hits = order[..k_used].iter().filter(|&&i| st.truths[i]).count();
    Ok(hits as f64 / k_used as f64)
}

/// Probability that a random positive outranks a random negative, counting
/// ties as ½ (computed via mid-ranks in O(n log n)).
pub fn auc_roc(st: &ScoredTruth) -> Result<f64, EvalError> {
    if st.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n_pos = st.positives();
    let n_neg = st.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass("auc_roc"));
    }
    let mut order: Vec<usize> = (0..st.len()).collect();
    order.sort_unstable_by(|&a, &b| st.scores[a].total_cmp(&st.scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && st.scores[order[j]] == st.scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j share the mid-rank.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if st.truths[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Average precision: the PR step-curve area accumulated by recall
/// increments, with equal scores processed as one threshold block.
pub fn auc_pr(st: &ScoredTruth) -> Result<f64, EvalError> {
    if st.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let total_pos = st.positives();
    if total_pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut order: Vec<usize> = (0..st.len()).collect();
    order.sort_unstable_by(|&a, &b| st.scores[b].total_cmp(&st.scores[a]));
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut block_tp = 0usize;
        while j < order.len() && st.scores[order[j]] == st.scores[order[i]] {
            if st.truths[order[j]] {
                block_tp += 1;
            }
            j += 1;
        }
        tp += block_tp;
        seen += j - i;
        if block_tp > 0 {
            let precision = tp as f64 / seen as f64;
            ap += (block_tp as f64 / total_pos as f64) * precision;
        }
        i = j;
    }
    // The exact value never exceeds 1; summation noise can by a few ulps.
    Ok(ap.min(1.0))
}

/// Share of the day's transacted money that sits on truly fraudulent
/// transactions of alerted cards. `transactions` rows are
/// `(card_id, amount, is_fraud)`.
pub fn fraud_amount_ratio(
    alerted_cards: &HashSet<&str>,
    transactions: &[(&str, f64, bool)],
) -> Result<f64, EvalError> {
    let total: f64 = transactions.iter().map(|(_, amount, _)| amount).sum();
    if !(total > 0.0) {
        return Err(EvalError::ZeroVolume);
    }
    let detected: f64 = transactions
        .iter()
        .filter(|(card, _, is_fraud)| *is_fraud && alerted_cards.contains(card))
        .map(|(_, amount, _)| amount)
        .sum();
    Ok(detected / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn st(scores: &[f64], truths: &[bool]) -> ScoredTruth {
        ScoredTruth::new(scores.to_vec(), truths.to_vec()).unwrap()
    }

    #[test]
    fn topk_counts_hits_among_the_cutoff() {
        let s = st(&[0.9, 0.8, 0.1], &[true, false, true]);
        assert_eq!(topk_precision(&s, 2).unwrap(), 0.5);
        assert_eq!(topk_precision(&s, 3).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn topk_all_positive_is_one() {
        let s = st(&[0.3, 0.5, 0.9], &[true, true, true]);
        for k in 1..=5 {
            assert_eq!(topk_precision(&s, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn topk_ties_resolve_in_input_order() {
        let s = st(&[0.5, 0.5, 0.5], &[true, false, false]);
        assert_eq!(topk_precision(&s, 1).unwrap(), 1.0);
        let s = st(&[0.5, 0.5, 0.5], &[false, true, false]);
        assert_eq!(topk_precision(&s, 1).unwrap(), 0.0);
    }

    #[test]
    fn topk_is_non_increasing_when_positives_lead() {
        let s = st(
            &[0.9, 0.8, 0.7, 0.4, 0.3, 0.2],
            &[true, true, true, false, false, false],
        );
        let mut last = 1.0;
        for k in 1..=6 {
            let p = topk_precision(&s, k).unwrap();
            assert!(p <= last + 1e-15);
            last = p;
        }
    }

    #[test]
    fn topk_bad_inputs_error() {
        let s = st(&[0.5], &[true]);
        assert!(matches!(topk_precision(&s, 0), Err(EvalError::BadK)));
        let empty = ScoredTruth::new(vec![], vec![]).unwrap();
        assert!(matches!(
            topk_precision(&empty, 1),
            Err(EvalError::EmptyInput)
        ));
    }

    #[test]
    fn auc_roc_perfect_and_tied_cases() {
        let s = st(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]);
        assert_eq!(auc_roc(&s).unwrap(), 1.0);
        let tied = st(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]);
        assert_eq!(auc_roc(&tied).unwrap(), 0.5);
        let single = st(&[0.5, 0.6], &[true, true]);
        assert!(matches!(auc_roc(&single), Err(EvalError::SingleClass(_))));
    }

    fn brute_force_roc(st: &ScoredTruth) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &ti) in st.truths().iter().enumerate() {
            if !ti {
                continue;
            }
            for (j, &tj) in st.truths().iter().enumerate() {
                if tj {
                    continue;
                }
                pairs += 1.0;
                if st.scores()[i] > st.scores()[j] {
                    wins += 1.0;
                } else if st.scores()[i] == st.scores()[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    fn brute_force_pr(st: &ScoredTruth) -> f64 {
        // Walk distinct thresholds from high to low, recomputing precision
        // from scratch at each one; sum precision · recall increments.
        let mut thresholds: Vec<f64> = st.scores().to_vec();
        thresholds.sort_unstable_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let total_pos = st.positives() as f64;
        let mut ap = 0.0;
        let mut last_recall = 0.0;
        for &t in &thresholds {
            let mut tp = 0.0;
            let mut picked = 0.0;
            for (i, &s) in st.scores().iter().enumerate() {
                if s >= t {
                    picked += 1.0;
                    if st.truths()[i] {
                        tp += 1.0;
                    }
                }
            }
            let recall = tp / total_pos;
            if recall > last_recall {
                ap += (recall - last_recall) * (tp / picked);
                last_recall = recall;
            }
        }
        ap
    }

    #[test]
    fn aucs_match_brute_force_oracles_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..60 {
            let n = rng.gen_range(5..200);
            // Quantized scores to force plenty of ties.
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0..20) as f64) / 19.0)
                .collect();
            let mut truths: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            truths[0] = true;
            truths[1] = false;
            let s = ScoredTruth::new(scores, truths).unwrap();
            let fast = auc_roc(&s).unwrap();
            let slow = brute_force_roc(&s);
            assert!((fast - slow).abs() < 1e-12, "roc case {case}");
            let fast_pr = auc_pr(&s).unwrap();
            let slow_pr = brute_force_pr(&s);
            assert!((fast_pr - slow_pr).abs() < 1e-12, "pr case {case}");
        }
    }

    #[test]
    fn auc_roc_is_invariant_under_increasing_transforms() {
        let s = st(
            &[0.11, 0.52, 0.73, 0.24, 0.95, 0.44],
            &[false, true, true, false, true, false],
        );
        let transformed = ScoredTruth::new(
            s.scores().iter().map(|x| x * x).collect(),
            s.truths().to_vec(),
        )
        .unwrap();
        assert!((auc_roc(&s).unwrap() - auc_roc(&transformed).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn auc_roc_flips_with_labels_when_tie_free() {
        let s = st(
            &[0.1, 0.9, 0.3, 0.7, 0.5],
            &[false, true, true, false, true],
        );
        let flipped = ScoredTruth::new(
            s.scores().to_vec(),
            s.truths().iter().map(|t| !t).collect(),
        )
        .unwrap();
        assert!((auc_roc(&s).unwrap() + auc_roc(&flipped).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auc_pr_single_positive_ranked_last() {
        let n = 8;
        let mut scores: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 / 10.0).collect();
        let mut truths = vec![false; n];
        truths[n - 1] = true;
        scores[n - 1] = 0.0;
        let s = ScoredTruth::new(scores, truths).unwrap();
        assert!((auc_pr(&s).unwrap() - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn auc_pr_perfect_ranking_is_one() {
        let s = st(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]);
        assert_eq!(auc_pr(&s).unwrap(), 1.0);
        let none = st(&[0.9, 0.8], &[false, false]);
        assert!(matches!(auc_pr(&none), Err(EvalError::NoPositives)));
    }

    #[test]
    fn fraud_amount_ratio_hand_case() {
        let day = [
            ("c1", 100.0, true),
            ("c1", 50.0, false),
            ("c2", 30.0, true),
            ("c3", 20.0, false),
            ("c4", 200.0, true),
        ];
        let alerted: HashSet<&str> = ["c1", "c3"].into_iter().collect();
        // Caught fraud money: the 100 on c1 (c3 has no fraud; c2/c4 missed).
        let ratio = fraud_amount_ratio(&alerted, &day).unwrap();
        assert!((ratio - 100.0 / 400.0).abs() < 1e-15);
        assert_eq!(
            fraud_amount_ratio(&HashSet::new(), &day).unwrap(),
            0.0
        );
        let all: HashSet<&str> = ["c1", "c2", "c3", "c4"].into_iter().collect();
        assert!((fraud_amount_ratio(&all, &day).unwrap() - 330.0 / 400.0).abs() < 1e-15);
    }

    #[test]
    fn zero_volume_is_undefined() {
        let day = [("c1", 0.0, true)];
        assert!(matches!(
            fraud_amount_ratio(&HashSet::new(), &day),
            Err(EvalError::ZeroVolume)
        ));
    }

    #[test]
    fn scored_truth_validates_inputs() {
        assert!(ScoredTruth::new(vec![1.2], vec![true]).is_err());
        assert!(ScoredTruth::new(vec![0.5, 0.6], vec![true]).is_err());
        assert!(ScoredTruth::with_amounts(vec![0.5], vec![true], vec![1.0, 2.0]).is_err());
    }
}
