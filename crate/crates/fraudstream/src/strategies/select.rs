//! Alert selection and pseudo-labelling primitives.
//!
//! All functions are pure given the RNG state and use explicit tie rules
//! (ascending `trx_id`) so selections are reproducible across platforms.

use rand_chacha::ChaCha8Rng;

use super::{ceil_share, ExploreMode, PoolItem, PseudoMode, StrategyError};

/// Anything assigning an outlier score to a feature vector; higher is more
/// anomalous. Implemented by the PCA model in [`crate::viz`].
pub trait OutlierScorer {
    fn outlierness(&self, features: &[f64]) -> f64;
}

/// Picks the `count` highest-scoring items, ties broken by ascending
/// `trx_id`. Returns the whole pool when it is smaller than `count`.
pub fn hrq_select<'a>(pool: &[PoolItem<'a>], count: usize) -> Vec<&'a str> {
    let mut order: Vec<&PoolItem<'a>> = pool.iter().collect();
    order.sort_unstable_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.trx_id.cmp(b.trx_id))
    });
    order.into_iter().take(count).map(|p| p.trx_id).collect()
}

fn uncertainty_pick<'a>(pool: &[PoolItem<'a>], count: usize, center: f64) -> Vec<&'a str> {
    let mut order: Vec<&PoolItem<'a>> = pool.iter().collect();
    order.sort_unstable_by(|a, b| {
        (a.score - center)
            .abs()
            .total_cmp(&(b.score - center).abs())
            .then_with(|| a.trx_id.cmp(b.trx_id))
    });
    order.into_iter().take(count).map(|p| p.trx_id).collect()
}

fn random_pick<'a>(pool: &[PoolItem<'a>], count: usize, rng: &mut ChaCha8Rng) -> Vec<&'a str> {
    if count >= pool.len() {
        return pool.iter().map(|p| p.trx_id).collect();
    }
    rand::seq::index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i].trx_id)
        .collect()
}

fn lowest_score_pick<'a>(pool: &[PoolItem<'a>], count: usize) -> Vec<&'a str> {
    let mut order: Vec<&PoolItem<'a>> = pool.iter().collect();
    order.sort_unstable_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.trx_id.cmp(b.trx_id))
    });
    order.into_iter().take(count).map(|p| p.trx_id).collect()
}

/// Mixed pick: `⌈ratio·count⌉` by uncertainty, the remainder drawn randomly
/// from the pool minus the uncertainty picks, so the result is distinct by
/// construction and each sub-selection can be replayed independently.
fn mixed_pick<'a>(
    pool: &[PoolItem<'a>],
    count: usize,
    ratio: f64,
    center: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a str> {
    let u_count = ceil_share(ratio, count);
    let mut picked = uncertainty_pick(pool, u_count, center);
    if picked.len() < count {
        let taken: std::collections::HashSet<&str> = picked.iter().copied().collect();
        let rest: Vec<PoolItem<'a>> = pool
            .iter()
            .filter(|p| !taken.contains(p.trx_id))
            .copied()
            .collect();
        picked.extend(random_pick(&rest, count - picked.len(), rng));
    }
    picked
}

/// Spends the exploration budget `q`. The pool must already exclude the
/// exploitation picks. When `q` meets or exceeds the pool, the whole pool is
/// returned (in pool order) without consuming randomness.
pub fn explore_select<'a>(
    mode: ExploreMode,
    pool: &[PoolItem<'a>],
    q: usize,
    mix_ratio: f64,
    center: f64,
    outliers: Option<&dyn OutlierScorer>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<&'a str>, StrategyError> {
    if q == 0 || pool.is_empty() {
        return Ok(Vec::new());
    }
    if q >= pool.len() {
        return Ok(pool.iter().map(|p| p.trx_id).collect());
    }
    Ok(match mode {
        ExploreMode::Random => random_pick(pool, q, rng),
        ExploreMode::Uncertainty => uncertainty_pick(pool, q, center),
        ExploreMode::Mixed => mixed_pick(pool, q, mix_ratio, center, rng),
        ExploreMode::PcaOutlier => {
            let model = outliers.ok_or(StrategyError::MissingOutlierModel)?;
            let mut order: Vec<(&PoolItem<'a>, f64)> = pool
                .iter()
                .map(|p| (p, model.outlierness(p.features)))
                .collect();
            order.sort_unstable_by(|a, b| {
                b.1.total_cmp(&a.1).then_with(|| a.0.trx_id.cmp(b.0.trx_id))
            });
            order.into_iter().take(q).map(|(p, _)| p.trx_id).collect()
        }
    })
}

/// Picks up to `m` ids to record as genuine *without* looking at ground
/// truth. The pool must already exclude today's investigator queries.
pub fn sssl_pseudo_label<'a>(
    mode: PseudoMode,
    pool: &[PoolItem<'a>],
    m: usize,
    mix_ratio: f64,
    center: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a str> {
    if m == 0 || pool.is_empty() {
        return Vec::new();
    }
    if m >= pool.len() {
        return pool.iter().map(|p| p.trx_id).collect();
    }
    match mode {
        PseudoMode::Random => random_pick(pool, m, rng),
        PseudoMode::Uncertainty => uncertainty_pick(pool, m, center),
        PseudoMode::Mixed => mixed_pick(pool, m, mix_ratio, center, rng),
        PseudoMode::LowestRisk => lowest_score_pick(pool, m),
    }
}

/// Keeps a uniform `⌈p·n⌉`-subset of the given items, preserving input
/// order. `p = 1` is the identity; `p = 0` drops everything.
pub fn srn_filter<T: Clone>(items: &[T], p: f64, rng: &mut ChaCha8Rng) -> Vec<T> {
    if p >= 1.0 {
        return items.to_vec();
    }
    let keep = ceil_share(p.max(0.0), items.len());
    if keep == 0 {
        return Vec::new();
    }
    let mut indices: Vec<usize> = rand::seq::index::sample(rng, items.len(), keep).into_vec();
    indices.sort_unstable();
    indices.into_iter().map(|i| items[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn pool_from(scores: &[f64]) -> (Vec<String>, Vec<f64>) {
        let ids: Vec<String> = (0..scores.len()).map(|i| format!("t{i:03}")).collect();
        (ids, scores.to_vec())
    }

    fn items<'a>(ids: &'a [String], scores: &'a [f64]) -> Vec<PoolItem<'a>> {
        ids.iter()
            .zip(scores)
            .map(|(id, &score)| PoolItem {
                trx_id: id,
                card_id: "c",
                score,
                features: &[],
            })
            .collect()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn hrq_picks_highest_scores() {
        let (ids, scores) = pool_from(&[0.9, 0.1, 0.8]);
        let picked = hrq_select(&items(&ids, &scores), 2);
        assert_eq!(picked, vec!["t000", "t002"]);
    }

    #[test]
    fn hrq_ties_break_by_ascending_id() {
        let (ids, scores) = pool_from(&[0.5, 0.5, 0.5, 0.5]);
        let picked = hrq_select(&items(&ids, &scores), 2);
        assert_eq!(picked, vec!["t000", "t001"]);
    }

    #[test]
    fn hrq_count_zero_is_empty_and_overlong_returns_all() {
        let (ids, scores) = pool_from(&[0.5, 0.6]);
        assert!(hrq_select(&items(&ids, &scores), 0).is_empty());
        assert_eq!(hrq_select(&items(&ids, &scores), 10).len(), 2);
    }

    #[test]
    fn hrq_is_invariant_under_monotone_transforms() {
        let (ids, scores) = pool_from(&[0.91, 0.13, 0.55, 0.78, 0.04, 0.67]);
        let transformed: Vec<f64> = scores.iter().map(|s| s * s * 0.9 + 0.05).collect();
        let a = hrq_select(&items(&ids, &scores), 3);
        let b = hrq_select(&items(&ids, &transformed), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn uncertainty_explore_picks_scores_nearest_the_center() {
        let (ids, scores) = pool_from(&[0.51, 0.95, 0.05, 0.49]);
        let picked = explore_select(
            ExploreMode::Uncertainty,
            &items(&ids, &scores),
            2,
            0.7,
            0.5,
            None,
            &mut rng(1),
        )
        .unwrap();
        let mut picked = picked;
        picked.sort_unstable();
        assert_eq!(picked, vec!["t000", "t003"]);
    }

    #[test]
    fn random_explore_is_deterministic_per_seed() {
        let (ids, scores) = pool_from(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        let pool = items(&ids, &scores);
        let a = explore_select(ExploreMode::Random, &pool, 3, 0.7, 0.5, None, &mut rng(5)).unwrap();
        let b = explore_select(ExploreMode::Random, &pool, 3, 0.7, 0.5, None, &mut rng(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let distinct: std::collections::HashSet<_> = a.iter().collect();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn mixed_explore_decomposes_into_uncertainty_then_random() {
        let scores: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let (ids, scores) = pool_from(&scores);
        let pool = items(&ids, &scores);
        let picked = explore_select(
            ExploreMode::Mixed,
            &pool,
            10,
            0.7,
            0.5,
            None,
            &mut rng(9),
        )
        .unwrap();
        assert_eq!(picked.len(), 10);
        let distinct: std::collections::HashSet<_> = picked.iter().collect();
        assert_eq!(distinct.len(), 10);

        // Replay the two sub-selections with the same RNG stream.
        let u = uncertainty_pick(&pool, 7, 0.5);
        assert_eq!(&picked[..7], u.as_slice());
        let taken: std::collections::HashSet<&str> = u.iter().copied().collect();
        let rest: Vec<PoolItem> = pool
            .iter()
            .filter(|p| !taken.contains(p.trx_id))
            .copied()
            .collect();
        let r = random_pick(&rest, 3, &mut rng(9));
        assert_eq!(&picked[7..], r.as_slice());
    }

    #[test]
    fn oversized_exploration_returns_the_whole_pool() {
        let (ids, scores) = pool_from(&[0.1, 0.9]);
        let picked = explore_select(
            ExploreMode::Random,
            &items(&ids, &scores),
            5,
            0.7,
            0.5,
            None,
            &mut rng(2),
        )
        .unwrap();
        assert_eq!(picked.len(), 2);
    }

    #[test]
    fn pca_mode_without_model_errors() {
        let (ids, scores) = pool_from(&[0.1, 0.9, 0.4]);
        let res = explore_select(
            ExploreMode::PcaOutlier,
            &items(&ids, &scores),
            1,
            0.7,
            0.5,
            None,
            &mut rng(2),
        );
        assert!(matches!(res, Err(StrategyError::MissingOutlierModel)));
    }

    #[test]
    fn pca_mode_ranks_by_outlierness() {
        struct ByFirstFeature;
        impl OutlierScorer for ByFirstFeature {
            fn outlierness(&self, features: &[f64]) -> f64 {
                features[0]
            }
        }
        let ids: Vec<String> = (0..3).map(|i| format!("t{i}")).collect();
        let feats = [vec![1.0], vec![9.0], vec![4.0]];
        let pool: Vec<PoolItem> = ids
            .iter()
            .zip(&feats)
            .map(|(id, f)| PoolItem {
                trx_id: id,
                card_id: "c",
                score: 0.5,
                features: f,
            })
            .collect();
        let picked = explore_select(
            ExploreMode::PcaOutlier,
            &pool,
            2,
            0.7,
            0.5,
            Some(&ByFirstFeature),
            &mut rng(2),
        )
        .unwrap();
        assert_eq!(picked, vec!["t1", "t2"]);
    }

    #[test]
    fn lowest_risk_pseudo_labels_pick_minimum_scores() {
        let (ids, scores) = pool_from(&[0.9, 0.2, 0.5, 0.01]);
        let picked = sssl_pseudo_label(
            PseudoMode::LowestRisk,
            &items(&ids, &scores),
            2,
            0.7,
            0.5,
            &mut rng(3),
        );
        assert_eq!(picked, vec!["t003", "t001"]);
    }

    #[test]
    fn pseudo_labeling_the_whole_pool_is_allowed() {
        let (ids, scores) = pool_from(&[0.9, 0.2]);
        let picked = sssl_pseudo_label(
            PseudoMode::Random,
            &items(&ids, &scores),
            2,
            0.7,
            0.5,
            &mut rng(3),
        );
        assert_eq!(picked.len(), 2);
    }

    #[test]
    fn mixed_pseudo_labels_decompose_like_mixed_exploration() {
        let scores: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let (ids, scores) = pool_from(&scores);
        let pool = items(&ids, &scores);
        let picked = sssl_pseudo_label(PseudoMode::Mixed, &pool, 10, 0.7, 0.5, &mut rng(4));
        assert_eq!(picked.len(), 10);
        assert_eq!(&picked[..7], uncertainty_pick(&pool, 7, 0.5).as_slice());
        let distinct: std::collections::HashSet<_> = picked.iter().collect();
        assert_eq!(distinct.len(), 10);
    }

    #[test]
    fn zero_budgets_consume_no_randomness() {
        let (ids, scores) = pool_from(&[0.3, 0.6, 0.9]);
        let pool = items(&ids, &scores);
        let mut a = rng(11);
        let mut b = rng(11);
        assert!(sssl_pseudo_label(PseudoMode::Random, &pool, 0, 0.7, 0.5, &mut a).is_empty());
        assert!(
            explore_select(ExploreMode::Random, &pool, 0, 0.7, 0.5, None, &mut a)
                .unwrap()
                .is_empty()
        );
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn srn_filter_end_points() {
        let ids: Vec<u32> = (0..10).collect();
        assert_eq!(srn_filter(&ids, 1.0, &mut rng(6)), ids);
        assert!(srn_filter(&ids, 0.0, &mut rng(6)).is_empty());
        let half = srn_filter(&ids, 0.5, &mut rng(6));
        assert_eq!(half.len(), 5);
        assert!(half.iter().all(|i| ids.contains(i)));
        // Preserves input ordering of the retained subset.
        let mut sorted = half.clone();
        sorted.sort_unstable();
        assert_eq!(half, sorted);
    }

    #[test]
    fn srn_filter_rounds_the_kept_count_up() {
        let ids: Vec<u32> = (0..3).collect();
        assert_eq!(srn_filter(&ids, 0.3, &mut rng(6)).len(), 1);
        assert_eq!(srn_filter(&ids, 0.34, &mut rng(6)).len(), 2);
    }
}
