//! Synthetic oversampling of one class: random duplication (ROS) or
//! nearest-neighbour interpolation (SMOTE).

use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{OversampleMode, StrategyError};
use crate::models::LabeledSample;

/// Generates `extra` synthetic samples from a single-class source set.
///
/// ROS copies uniformly chosen source samples verbatim. SMOTE draws a base
/// point, one of its `k_neighbors` nearest same-class neighbours (Euclidean,
/// ties by lower index), and `u ~ Uniform[0,1)`, emitting
/// `base + u · (neighbour − base)`. A single-sample source degrades SMOTE to
/// ROS with a logged warning.
///
/// The RNG draw order per generated sample is fixed (base, neighbour choice,
/// `u`), so every synthetic point can be re-derived from the seed.
pub fn oversample(
    mode: OversampleMode,
    source: &[LabeledSample],
    extra: usize,
    k_neighbors: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LabeledSample>, StrategyError> {
    if source.is_empty() {
        return Err(StrategyError::InvalidSpec(
            "oversampling requires a nonempty source set".into(),
        ));
    }
    let class = source[0].class;
    if source.iter().any(|s| s.class != class) {
        return Err(StrategyError::InvalidSpec(
            "oversampling source must be single-class".into(),
        ));
    }
    if extra == 0 {
        return Ok(Vec::new());
    }
    let mode = match mode {
        OversampleMode::Smote if source.len() < 2 => {
            log::warn!("SMOTE needs at least 2 samples, falling back to ROS");
            OversampleMode::Ros
        }
        m => m,
    };
    match mode {
        OversampleMode::Ros => Ok((0..extra)
            .map(|_| source[rng.gen_range(0..source.len())].clone())
            .collect()),
        OversampleMode::Smote => {
            if k_neighbors == 0 {
                return Err(StrategyError::InvalidParam(
                    "SMOTE needs k_neighbors >= 1".into(),
                ));
            }
            let k_eff = k_neighbors.min(source.len() - 1);
            let mut neighbour_cache: HashMap<usize, Vec<usize>> = HashMap::new();
            let mut out = Vec::with_capacity(extra);
            for _ in 0..extra {
                let base = rng.gen_range(0..source.len());
                let pick = rng.gen_range(0..k_eff);
                let u: f64 = rng.gen();
                let neighbours = neighbour_cache
                    .entry(base)
                    .or_insert_with(|| nearest(source, base, k_eff));
                let nn = neighbours[pick];
                let features: Vec<f64> = source[base]
                    .features
                    .iter()
                    .zip(&source[nn].features)
                    .map(|(&a, &b)| a + u * (b - a))
                    .collect();
                out.push(LabeledSample {
                    features,
                    class,
                    weight: source[base].weight,
                });
            }
            Ok(out)
        }
    }
}

/// Indices of the `k` nearest neighbours of `base` (squared Euclidean, ties
/// by lower index), excluding `base` itself.
fn nearest(source: &[LabeledSample], base: usize, k: usize) -> Vec<usize> {
    let mut dists: Vec<(f64, usize)> = source
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != base)
        .map(|(i, s)| {
            let d: f64 = s
                .features
                .iter()
                .zip(&source[base].features)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            (d, i)
        })
        .collect();
    dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    dists.truncate(k);
    dists.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Class;

    fn genuine(features: &[f64]) -> LabeledSample {
        LabeledSample::new(features.to_vec(), Class::Genuine)
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn ros_emits_exact_copies() {
        let source = vec![genuine(&[1.0, 2.0]), genuine(&[3.0, 4.0])];
        let out = oversample(OversampleMode::Ros, &source, 5, 5, &mut rng(1)).unwrap();
        assert_eq!(out.len(), 5);
        for s in out {
            assert!(source.contains(&s));
        }
    }

    #[test]
    fn smote_stays_on_the_segment() {
        let source = vec![genuine(&[0.0, 0.0]), genuine(&[2.0, 2.0])];
        let out = oversample(OversampleMode::Smote, &source, 50, 5, &mut rng(2)).unwrap();
        for s in out {
            let (x, y) = (s.features[0], s.features[1]);
            assert!((x - y).abs() < 1e-12, "({x}, {y}) is off the diagonal");
            assert!((0.0..=2.0).contains(&x));
        }
    }

    #[test]
    fn smote_samples_replay_from_the_seed() {
        let source: Vec<LabeledSample> = (0..30)
            .map(|i| genuine(&[(i as f64 * 0.61).sin() * 5.0, (i as f64 * 0.37).cos() * 5.0]))
            .collect();
        let k = 4;
        let out = oversample(OversampleMode::Smote, &source, 200, k, &mut rng(7)).unwrap();
        let mut replay = rng(7);
        for s in &out {
            let base = replay.gen_range(0..source.len());
            let pick = replay.gen_range(0..k);
            let u: f64 = replay.gen();
            let nn = nearest(&source, base, k)[pick];
            for (d, (&a, &b)) in s
                .features
                .iter()
                .zip(source[base].features.iter().zip(&source[nn].features))
            {
                assert!((d - (a + u * (b - a))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn smote_single_sample_falls_back_to_ros() {
        let source = vec![genuine(&[1.0, 1.0])];
        let out = oversample(OversampleMode::Smote, &source, 3, 5, &mut rng(3)).unwrap();
        assert_eq!(out.len(), 3);
        for s in out {
            assert_eq!(s, source[0]);
        }
    }

    #[test]
    fn empty_source_is_an_error() {
        assert!(oversample(OversampleMode::Ros, &[], 3, 5, &mut rng(4)).is_err());
    }

    #[test]
    fn mixed_class_source_is_an_error() {
        let source = vec![
            genuine(&[0.0]),
            LabeledSample::new(vec![1.0], Class::Fraud),
        ];
        assert!(oversample(OversampleMode::Ros, &source, 1, 5, &mut rng(5)).is_err());
    }

    #[test]
    fn neighbours_exclude_self_and_break_ties_low() {
        let source = vec![
            genuine(&[0.0]),
            genuine(&[1.0]),
            genuine(&[1.0]),
            genuine(&[5.0]),
        ];
        assert_eq!(nearest(&source, 0, 2), vec![1, 2]);
        assert_eq!(nearest(&source, 1, 2), vec![2, 0]);
    }
}
