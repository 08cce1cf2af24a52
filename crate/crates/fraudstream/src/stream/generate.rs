//! Synthetic transaction stream generator.
//!
//! Produces a card-centric stream with a controlled class imbalance: card
//! sizes are geometric, a small subset of cards is compromised and carries
//! all fraud, and feature vectors come from Gaussian mixtures — a broad
//! multi-component genuine cloud and a tighter fraud cloud offset along a
//! random direction, with optional drift from a given day on: a step shift
//! of the fraud cloud, a continuous migration of the whole population, or
//! both. Amounts are log-normal with a heavier fraud tail and are mirrored
//! into `features[0]`.
//!
//! The realized fraud count is exactly `round(total * fraud_rate)` (at least
//! one), spread over days as evenly as the quota allows, so even short
//! streams have no fraud-free days.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal, StandardNormal};

use super::{Class, Dataset, GroundTruth, StreamError, Transaction};

/// Configuration for [`generate_stream`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub days: u32,
    pub transactions_per_day: usize,
    /// Fraction of all transactions that are fraudulent, in (0, 0.5).
    pub fraud_rate: f64,
    /// Feature vector length including the leading amount; at least 2.
    pub n_features: usize,
    /// Mixture components of the genuine cloud.
    pub genuine_components: usize,
    /// Mixture components of the fraud cloud.
    pub fraud_components: usize,
    /// Std dev of genuine component centers around the origin.
    pub genuine_spread: f64,
    /// Std dev of fraud component centers around the fraud anchor.
    pub fraud_spread: f64,
    /// Per-coordinate std dev of genuine samples around their center.
    pub genuine_scale: f64,
    /// Per-coordinate std dev of fraud samples around their center.
    pub fraud_scale: f64,
    /// Distance of the fraud anchor from the origin; smaller means more
    /// class overlap and a harder detection problem.
    pub fraud_separation: f64,
    /// Probability that a card is compromised (carries fraud).
    pub fraud_card_rate: f64,
    /// Fraction of a compromised card's transactions that are fraudulent.
    pub fraud_txn_frac: f64,
    /// Mean number of transactions per card (geometric sizes, minimum 1).
    pub mean_card_size: f64,
    /// First day on which the fraud cloud drifts; 0 disables drift.
    pub drift_day: u32,
    /// Distance the fraud cloud moves from `drift_day` on.
    pub drift_magnitude: f64,
    /// Per-day distance the whole population (both classes) travels along a
    /// fixed random direction from `drift_day` on; 0 keeps the stream
    /// stationary. Models gradual behavioural change that leaves the class
    /// geometry intact while making old training data stale.
    pub population_drift_rate: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            days: 30,
            transactions_per_day: 1000,
            fraud_rate: 0.002,
            n_features: 32,
            genuine_components: 3,
            fraud_components: 2,
            genuine_spread: 2.0,
            fraud_spread: 1.0,
            genuine_scale: 1.0,
            fraud_scale: 1.2,
            fraud_separation: 2.5,
            fraud_card_rate: 0.01,
            fraud_txn_frac: 0.5,
            mean_card_size: 3.0,
            drift_day: 0,
            drift_magnitude: 0.0,
            population_drift_rate: 0.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    fn validate(&self) -> Result<(), StreamError> {
        let err = |m: &str| Err(StreamError::Config(m.into()));
        if self.days == 0 {
            return err("days must be positive");
        }
        if self.transactions_per_day == 0 {
            return err("transactions_per_day must be positive");
        }
        if !(self.fraud_rate > 0.0 && self.fraud_rate < 0.5) {
            return err("fraud_rate must lie in (0, 0.5)");
        }
        if self.n_features < 2 {
            return err("n_features must be at least 2");
        }
        if self.genuine_components == 0 || self.fraud_components == 0 {
            return err("mixture components must be positive");
        }
        if !(self.fraud_card_rate > 0.0 && self.fraud_card_rate <= 1.0) {
            return err("fraud_card_rate must lie in (0, 1]");
        }
        if !(self.fraud_txn_frac > 0.0 && self.fraud_txn_frac <= 1.0) {
            return err("fraud_txn_frac must lie in (0, 1]");
        }
        if !(self.mean_card_size >= 1.0) {
            return err("mean_card_size must be at least 1");
        }
        for (name, v) in [
            ("genuine_spread", self.genuine_spread),
            ("fraud_spread", self.fraud_spread),
            ("genuine_scale", self.genuine_scale),
            ("fraud_scale", self.fraud_scale),
            ("fraud_separation", self.fraud_separation),
            ("drift_magnitude", self.drift_magnitude),
            ("population_drift_rate", self.population_drift_rate),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(StreamError::Config(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

// Log-normal amount parameters (ln scale). Fraud skews higher so that the
// detected-amount metric has signal, but the overlap is substantial.
const LN_AMOUNT_MU_GENUINE: f64 = 3.0;
const LN_AMOUNT_MU_FRAUD: f64 = 3.8;
const LN_AMOUNT_SIGMA: f64 = 1.0;

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Generates a synthetic stream. Deterministic in the config (including the
/// seed): repeated calls yield identical datasets.
pub fn generate_stream(cfg: &GenConfig) -> Result<Dataset, StreamError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = cfg.days as usize * cfg.transactions_per_day;
    let quota = ((total as f64 * cfg.fraud_rate).round() as usize).max(1);

    // Feature geometry lives in the n-1 coordinates after the amount.
    let dim = cfg.n_features - 1;
    let genuine_centers: Vec<Vec<f64>> = (0..cfg.genuine_components)
        .map(|_| {
            (0..dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * cfg.genuine_spread)
                .collect()
        })
        .collect();
    let fraud_dir = unit_vector(&mut rng, dim);
    let fraud_centers: Vec<Vec<f64>> = (0..cfg.fraud_components)
        .map(|_| {
            (0..dim)
                .map(|i| {
                    cfg.fraud_separation * fraud_dir[i]
                        + rng.sample::<f64, _>(StandardNormal) * cfg.fraud_spread
                })
                .collect()
        })
        .collect();
    let drift_dir = unit_vector(&mut rng, dim);
    // Drawn only when enabled so streams without population drift keep the
    // exact RNG consumption (and bytes) they had before the knob existed.
    let population_drift = cfg.drift_day > 0 && cfg.population_drift_rate > 0.0;
    let population_dir: Vec<f64> = if population_drift {
        unit_vector(&mut rng, dim)
    } else {
        Vec::new()
    };

    // Cards: geometric sizes with mean `mean_card_size`, truncated so the
    // sizes sum exactly to the stream length.
    let p_stop = (1.0 / cfg.mean_card_size).clamp(1e-6, 1.0);
    let mut card_sizes: Vec<usize> = Vec::new();
    let mut assigned = 0usize;
    while assigned < total {
        let u: f64 = rng.gen::<f64>();
        let extra = if p_stop >= 1.0 {
            0
        } else {
            ((1.0 - u).ln() / (1.0 - p_stop).ln()).floor() as usize
        };
        let size = (1 + extra).min(total - assigned);
        card_sizes.push(size);
        assigned += size;
    }
    let n_cards = card_sizes.len();

    // Pick compromised cards and their fraud counts until the quota is met.
    let mut card_order: Vec<usize> = (0..n_cards).collect();
    card_order.shuffle(&mut rng);
    let mut fraud_per_card = vec![0usize; n_cards];
    let mut remaining = quota;
    for &c in &card_order {
        if remaining == 0 {
            break;
        }
        if rng.gen_bool(cfg.fraud_card_rate) {
            let want = ((card_sizes[c] as f64 * cfg.fraud_txn_frac).round() as usize).max(1);
            let take = want.min(card_sizes[c]).min(remaining);
            fraud_per_card[c] = take;
            remaining -= take;
        }
    }
    if remaining > 0 {
        // Rare for sane configs: force additional cards in shuffled order.
        for &c in &card_order {
            if remaining == 0 {
                break;
            }
            if fraud_per_card[c] == 0 {
                let take = card_sizes[c].min(remaining);
                fraud_per_card[c] = take;
                remaining -= take;
            }
        }
    }
    assert_eq!(remaining, 0, "fraud quota not assignable");

    // Spread the fraud quota over days as evenly as possible, then shuffle
    // the day multisets so card/day pairings are random.
    let base = quota / cfg.days as usize;
    let rem = quota % cfg.days as usize;
    let mut fraud_days: Vec<u32> = Vec::with_capacity(quota);
    let mut genuine_days: Vec<u32> = Vec::with_capacity(total - quota);
    for d in 0..cfg.days {
        let f = base + usize::from((d as usize) < rem);
        fraud_days.extend(std::iter::repeat(d).take(f));
        genuine_days.extend(std::iter::repeat(d).take(cfg.transactions_per_day - f));
    }
    fraud_days.shuffle(&mut rng);
    genuine_days.shuffle(&mut rng);

    // Lay out (card, class, day) triples in card order, then order the
    // stream by day and shuffle arrival order within each day.
    struct Slot {
        card: usize,
        class: Class,
        day: u32,
    }
    let mut slots: Vec<Slot> = Vec::with_capacity(total);
    let mut fi = 0usize;
    let mut gi = 0usize;
    for (c, &size) in card_sizes.iter().enumerate() {
        for k in 0..size {
            if k < fraud_per_card[c] {
                slots.push(Slot {
                    card: c,
                    class: Class::Fraud,
                    day: fraud_days[fi],
                });
                fi += 1;
            } else {
                slots.push(Slot {
                    card: c,
                    class: Class::Genuine,
                    day: genuine_days[gi],
                });
                gi += 1;
            }
        }
    }
    let mut per_day: Vec<Vec<usize>> = vec![Vec::new(); cfg.days as usize];
    for (i, s) in slots.iter().enumerate() {
        per_day[s.day as usize].push(i);
    }
    for day_slots in &mut per_day {
        day_slots.shuffle(&mut rng);
    }

    // Sample features in stream order.
    let amount_genuine = LogNormal::new(LN_AMOUNT_MU_GENUINE, LN_AMOUNT_SIGMA).unwrap();
    let amount_fraud = LogNormal::new(LN_AMOUNT_MU_FRAUD, LN_AMOUNT_SIGMA).unwrap();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let id_width = total.to_string().len().max(6);
    let card_width = n_cards.to_string().len().max(6);

    let mut transactions = Vec::with_capacity(total);
    let mut labels = std::collections::HashMap::with_capacity(total);
    let mut counter = 0usize;
    for (day, day_slots) in per_day.iter().enumerate() {
        for (seq, &si) in day_slots.iter().enumerate() {
            let slot = &slots[si];
            let (centers, scale, amount_dist) = match slot.class {
                Class::Genuine => (&genuine_centers, cfg.genuine_scale, &amount_genuine),
                Class::Fraud => (&fraud_centers, cfg.fraud_scale, &amount_fraud),
            };
            let center = &centers[rng.gen_range(0..centers.len())];
            let drifted = slot.class.is_fraud()
                && cfg.drift_day > 0
                && slot.day >= cfg.drift_day
                && cfg.drift_magnitude > 0.0;
            let population_shift = if population_drift && slot.day >= cfg.drift_day {
                cfg.population_drift_rate * f64::from(slot.day - cfg.drift_day + 1)
            } else {
                0.0
            };
            let amount = rng.sample(*amount_dist);
            let mut features = Vec::with_capacity(cfg.n_features);
            features.push(amount);
            for i in 0..dim {
                let mut v = center[i] + scale * rng.sample::<f64, _>(&noise);
                if drifted {
                    v += cfg.drift_magnitude * drift_dir[i];
                }
                if population_shift > 0.0 {
                    v += population_shift * population_dir[i];
                }
                features.push(v);
            }
            let trx_id = format!("t{counter:0id_width$}");
            counter += 1;
            labels.insert(trx_id.clone(), slot.class);
            transactions.push(Transaction {
                trx_id,
                card_id: format!("c{:0card_width$}", slot.card),
                day: day as u32,
                seq: seq as u32,
                amount,
                features,
            });
        }
    }

    Dataset::new(transactions, GroundTruth::new(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> GenConfig {
        GenConfig {
            days: 5,
            transactions_per_day: 400,
            fraud_rate: 0.01,
            n_features: 6,
            seed,
            ..GenConfig::default()
        }
    }

    #[test]
    fn realized_fraud_count_matches_quota_exactly() {
        let cfg = small_cfg(7);
        let ds = generate_stream(&cfg).unwrap();
        let expected = (2000.0 * 0.01_f64).round() as usize;
        assert_eq!(ds.ground_truth().fraud_count(), expected);
        assert_eq!(ds.len(), 2000);
        assert_eq!(ds.days(), 5);
    }

    #[test]
    fn fraud_is_spread_evenly_over_days() {
        let cfg = small_cfg(11);
        let ds = generate_stream(&cfg).unwrap();
        for day in 0..cfg.days {
            let frauds = ds
                .day_batch(day)
                .unwrap()
                .iter()
                .filter(|t| ds.ground_truth().is_fraud(&t.trx_id))
                .count();
            assert_eq!(frauds, 4, "day {day}"); // 20 frauds over 5 days
            assert_eq!(ds.day_batch(day).unwrap().len(), 400);
        }
    }

    #[test]
    fn imbalance_holds_across_seeds() {
        for seed in 0..10 {
            let cfg = GenConfig {
                days: 1,
                transactions_per_day: 10_000,
                fraud_rate: 0.002,
                n_features: 4,
                seed,
                ..GenConfig::default()
            };
            let ds = generate_stream(&cfg).unwrap();
            let frauds = ds.ground_truth().fraud_count() as f64;
            let target = 10_000.0 * 0.002;
            assert!((frauds - target).abs() <= 0.1 * target, "seed {seed}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_stream(&small_cfg(3)).unwrap();
        let b = generate_stream(&small_cfg(3)).unwrap();
        assert_eq!(a.transactions(), b.transactions());
        let c = generate_stream(&small_cfg(4)).unwrap();
        assert_ne!(a.transactions(), c.transactions());
    }

    #[test]
    fn fraud_lives_on_a_small_set_of_cards() {
        let ds = generate_stream(&small_cfg(5)).unwrap();
        let mut fraud_cards = std::collections::HashSet::new();
        let mut all_cards = std::collections::HashSet::new();
        for t in ds.transactions() {
            all_cards.insert(&t.card_id);
            if ds.ground_truth().is_fraud(&t.trx_id) {
                fraud_cards.insert(&t.card_id);
            }
        }
        assert!(!fraud_cards.is_empty());
        assert!(fraud_cards.len() * 10 < all_cards.len());
    }

    #[test]
    fn amounts_mirror_first_feature_and_are_positive() {
        let ds = generate_stream(&small_cfg(9)).unwrap();
        for t in ds.transactions() {
            assert!(t.amount > 0.0);
            assert_eq!(t.amount, t.features[0]);
            assert_eq!(t.features.len(), 6);
        }
    }

    #[test]
    fn zero_drift_magnitude_changes_nothing() {
        let mut a_cfg = small_cfg(13);
        a_cfg.drift_day = 3;
        a_cfg.drift_magnitude = 0.0;
        let mut b_cfg = small_cfg(13);
        b_cfg.drift_day = 0;
        let a = generate_stream(&a_cfg).unwrap();
        let b = generate_stream(&b_cfg).unwrap();
        assert_eq!(a.transactions(), b.transactions());
    }

    #[test]
    fn drift_moves_late_fraud_only() {
        let mut cfg = small_cfg(17);
        cfg.drift_day = 3;
        cfg.drift_magnitude = 5.0;
        let base = generate_stream(&small_cfg(17)).unwrap();
        let drifted = generate_stream(&cfg).unwrap();
        for (a, b) in base.transactions().iter().zip(drifted.transactions()) {
            let is_fraud = base.ground_truth().is_fraud(&a.trx_id);
            if is_fraud && a.day >= 3 {
                assert_ne!(a.features, b.features, "{}", a.trx_id);
            } else {
                assert_eq!(a.features, b.features, "{}", a.trx_id);
            }
        }
    }

    #[test]
    fn population_drift_translates_each_day_batch_linearly() {
        let mut cfg = small_cfg(19);
        cfg.drift_day = 2;
        cfg.population_drift_rate = 4.0;
        let drifted = generate_stream(&cfg).unwrap();
        // The direction draw reshuffles everything, so compare population
        // statistics: per-day mean feature vectors must move by the same
        // per-day step once the drift starts, for both classes together.
        let day_mean = |ds: &Dataset, day: u32| -> Vec<f64> {
            let batch = ds.day_batch(day).unwrap();
            let dim = ds.n_features() - 1;
            let mut mean = vec![0.0; dim];
            for t in batch {
                for (m, v) in mean.iter_mut().zip(&t.features[1..]) {
                    *m += v / batch.len() as f64;
                }
            }
            mean
        };
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let before = day_mean(&drifted, 0);
        let at_start = day_mean(&drifted, 2);
        let at_end = day_mean(&drifted, 4);
        // Days 0 and 1 are stationary; days 2..4 step 4.0 further each day.
        assert!(dist(&before, &day_mean(&drifted, 1)) < 2.0);
        let first_step = dist(&before, &at_start);
        assert!((first_step - 4.0).abs() < 2.0, "first step {first_step:.2}");
        let total = dist(&before, &at_end);
        assert!((total - 12.0).abs() < 2.0, "total movement {total:.2}");
        // Both classes move together: fraud-only means shift the same way.
        let fraud_mean = |ds: &Dataset, day: u32| -> Vec<f64> {
            let dim = ds.n_features() - 1;
            let mut mean = vec![0.0; dim];
            let frauds: Vec<_> = ds
                .day_batch(day)
                .unwrap()
                .iter()
                .filter(|t| ds.ground_truth().is_fraud(&t.trx_id))
                .collect();
            for t in &frauds {
                for (m, v) in mean.iter_mut().zip(&t.features[1..]) {
                    *m += v / frauds.len() as f64;
                }
            }
            mean
        };
        let fraud_total = dist(&fraud_mean(&drifted, 0), &fraud_mean(&drifted, 4));
        assert!(
            (fraud_total - 12.0).abs() < 4.0,
            "fraud cloud should ride along, moved {fraud_total:.2}"
        );
    }

    #[test]
    fn zero_population_drift_rate_changes_nothing() {
        let mut a_cfg = small_cfg(23);
        a_cfg.drift_day = 3;
        a_cfg.population_drift_rate = 0.0;
        let a = generate_stream(&a_cfg).unwrap();
        let mut b_cfg = small_cfg(23);
        b_cfg.drift_day = 3;
        let b = generate_stream(&b_cfg).unwrap();
        assert_eq!(a.transactions(), b.transactions());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = small_cfg(1);
        cfg.fraud_rate = 0.7;
        assert!(matches!(
            generate_stream(&cfg),
            Err(StreamError::Config(_))
        ));
        let mut cfg = small_cfg(1);
        cfg.n_features = 1;
        assert!(generate_stream(&cfg).is_err());
        let mut cfg = small_cfg(1);
        cfg.days = 0;
        assert!(generate_stream(&cfg).is_err());
    }
}
