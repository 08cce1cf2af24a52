//! Paired Wilcoxon signed-rank test.
//!
//! Zero differences are dropped and tied absolute differences mid-ranked.
//! Up to 25 effective pairs the two-sided p-value comes from the exact
//! sign-assignment distribution (computed by dynamic programming over the
//! doubled ranks, which are integers even with mid-ranks); above that a
//! normal approximation with tie-corrected variance and continuity
//! correction is used.

use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;

const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonOutcome {
    /// Two-sided p-value in (0, 1].
    pub p_value: f64,
    /// W⁺: sum of the ranks of positive differences.
    pub statistic: f64,
    /// Pairs remaining after dropping zero differences.
    pub n_used: usize,
    /// True when every difference was zero (p is forced to 1).
    pub degenerate: bool,
    /// True when the exact distribution was used.
    pub exact: bool,
}

/// Compares paired samples; `a` and `b` must have equal lengths. With fewer
/// than ~5 non-zero differences the test has no power but the exact p-value
/// is still well-defined and returned.
pub fn wilcoxon_paired(a: &[f64], b: &[f64]) -> Result<WilcoxonOutcome, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Ok(WilcoxonOutcome {
            p_value: 1.0,
            statistic: 0.0,
            n_used: 0,
            degenerate: true,
            exact: true,
        });
    }

    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0f64; n];
    let mut tie_sizes: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = midrank;
        }
        tie_sizes.push(j - i);
        i = j;
    }
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let p_value = if n <= EXACT_LIMIT {
        exact_two_sided(&ranks, w_plus)
    } else {
        approx_two_sided(n, &tie_sizes, w_plus)
    };
    Ok(WilcoxonOutcome {
        p_value,
        statistic: w_plus,
        n_used: n,
        degenerate: false,
        exact: n <= EXACT_LIMIT,
    })
}

/// Exact two-sided p-value: doubles all ranks to integers, counts sign
/// assignments by their doubled rank-sum, and doubles the smaller tail
/// (capped at 1).
fn exact_two_sided(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max_sum + 1];
    counts[0] = 1.0;
    let mut reached = 0usize;
    for &r in &doubled {
        reached += r;
        for s in (r..=reached).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total: f64 = (ranks.len() as f64).exp2();
    let observed = (2.0 * w_plus).round() as usize;
    let below: f64 = counts[..=observed].iter().sum();
    let above: f64 = counts[observed..].iter().sum();
    (2.0 * (below.min(above)) / total).min(1.0)
}

fn approx_two_sided(n: usize, tie_sizes: &[usize], w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_correction: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_correction;
    let sd = variance.sqrt();
    let deviation = ((w_plus - mean).abs() - 0.5).max(0.0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(deviation / sd))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_degenerate() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let out = wilcoxon_paired(&a, &a).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.p_value, 1.0);
        assert_eq!(out.n_used, 0);
    }

    #[test]
    fn six_uniform_wins_give_the_textbook_p() {
        let a = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = wilcoxon_paired(&a, &b).unwrap();
        assert!(out.exact);
        assert!((out.p_value - 0.03125).abs() < 1e-15);
        assert_eq!(out.statistic, 21.0);
    }

    #[test]
    fn swapping_sides_leaves_p_unchanged() {
        let a = [5.0, 1.0, 8.0, 3.0, 9.0, 2.0, 7.0];
        let b = [4.5, 1.5, 6.0, 3.5, 8.0, 2.5, 9.0];
        let ab = wilcoxon_paired(&a, &b).unwrap();
        let ba = wilcoxon_paired(&b, &a).unwrap();
        assert!((ab.p_value - ba.p_value).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            wilcoxon_paired(&[1.0], &[1.0, 2.0]),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    /// Exhaustive 2ⁿ sign enumeration, the independent oracle for the exact
    /// branch.
    fn enumerated_p(diffs: &[f64]) -> f64 {
        let n = diffs.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
        let mut ranks = vec![0.0f64; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
                j += 1;
            }
            for &idx in &order[i..j] {
                ranks[idx] = (i + 1 + j) as f64 / 2.0;
            }
            i = j;
        }
        let observed: f64 = diffs
            .iter()
            .zip(&ranks)
            .filter(|(d, _)| **d > 0.0)
            .map(|(_, r)| r)
            .sum();
        let mut le = 0usize;
        let mut ge = 0usize;
        for mask in 0u32..(1 << n) {
            let w: f64 = (0..n)
                .filter(|bit| mask >> bit & 1 == 1)
                .map(|bit| ranks[bit])
                .sum();
            if w <= observed + 1e-12 {
                le += 1;
            }
            if w >= observed - 1e-12 {
                ge += 1;
            }
        }
        let total = (1u64 << n) as f64;
        (2.0 * (le.min(ge) as f64) / total).min(1.0)
    }

    #[test]
    fn exact_branch_matches_exhaustive_enumeration() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for case in 0..50 {
            let n = rng.gen_range(3..=12);
            let a: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..12) as f64) / 3.0).collect();
            let b: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..12) as f64) / 3.0).collect();
            let diffs: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(&x, &y)| x - y)
                .filter(|d| *d != 0.0)
                .collect();
            if diffs.is_empty() {
                continue;
            }
            let fast = wilcoxon_paired(&a, &b).unwrap();
            let slow = enumerated_p(&diffs);
            assert!(
                (fast.p_value - slow).abs() < 1e-12,
                "case {case}: {} vs {slow}",
                fast.p_value
            );
        }
    }

    #[test]
    fn approximate_branch_is_sane_for_large_n() {
        // 40 pairs, consistent small advantage: p must be tiny; and the
        // approximation should be close to the exact value's scale.
        let a: Vec<f64> = (0..40).map(|i| i as f64 + 0.6).collect();
        let b: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let out = wilcoxon_paired(&a, &b).unwrap();
        assert!(!out.exact);
        assert!(out.p_value < 1e-6, "p = {}", out.p_value);

        // Balanced wins and losses: p should be large.
        let a: Vec<f64> = (0..40)
            .map(|i| i as f64 + if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let b: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let out = wilcoxon_paired(&a, &b).unwrap();
        assert!(out.p_value > 0.5, "p = {}", out.p_value);
    }

    #[test]
    fn exact_and_approx_agree_near_the_boundary() {
        // Same data evaluated by both branches (by padding with zero
        // differences the n stays the same; instead build 25/26 pairs).
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..25).map(|_| rng.gen::<f64>() * 2.0).collect();
        let b: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let exact = wilcoxon_paired(&a, &b).unwrap();
        assert!(exact.exact);
        // The normal approximation at n=25 should land within a few percent.
        let approx_p = super::approx_two_sided(
            25,
            &vec![1usize; 25],
            exact.statistic,
        );
        assert!((approx_p - exact.p_value).abs() < 0.05);
    }
}
