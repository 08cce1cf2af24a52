//! Card-level scoring: combining per-transaction scores into a card score,
//! and query-frequency counters for uncertainty-driven card selection.

use std::collections::BTreeMap;

use super::{CardBag, Combining, StrategyError};

/// Combines each bag of transaction scores into one card score; output order
/// matches input order.
///
/// * `Max`: the bag's highest score.
/// * `Softmax`: `Σ pᵢ·e^{α·pᵢ} / Σ e^{α·pᵢ}` — a smooth, α-sharpened max.
/// * `Logarithmic`: `Σ −1/log₁₀(sᵢ)` with `sᵢ = pᵢ − ε` when `pᵢ > 0.5`,
///   else `sᵢ = ε`; scores above the boundary dominate, ones below add the
///   same tiny constant, and the result grows without bound in the count of
///   suspicious transactions (it is *not* a probability).
pub fn combine_card_scores(
    bags: &[CardBag],
    combining: Combining,
    alpha: f64,
    epsilon: f64,
) -> Result<Vec<f64>, StrategyError> {
    if !(epsilon > 0.0) {
        return Err(StrategyError::InvalidParam(format!(
            "epsilon must be positive, found {epsilon}"
        )));
    }
    if combining == Combining::Logarithmic && epsilon >= 0.5 {
        return Err(StrategyError::InvalidParam(format!(
            "logarithmic combining needs epsilon < 0.5, found {epsilon}"
        )));
    }
    if combining == Combining::Softmax && !alpha.is_finite() {
        return Err(StrategyError::InvalidParam(format!(
            "softmax alpha must be finite, found {alpha}"
        )));
    }
    let mut out = Vec::with_capacity(bags.len());
    for bag in bags {
        if bag.scores.is_empty() {
            return Err(StrategyError::EmptyBag(bag.card_id.clone()));
        }
        for &p in &bag.scores {
            if !(0.0..=1.0).contains(&p) {
                return Err(StrategyError::ScoreOutOfRange {
                    card: bag.card_id.clone(),
                    score: p,
                });
            }
        }
        let combined = match combining {
            Combining::Max => bag
                .scores
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
            Combining::Softmax => {
                let mut num = 0.0;
                let mut den = 0.0;
                for &p in &bag.scores {
                    let w = (alpha * p).exp();
                    num += p * w;
                    den += w;
                }
                num / den
            }
            Combining::Logarithmic => bag
                .scores
                .iter()
                .map(|&p| {
                    let s = if p > 0.5 { p - epsilon } else { epsilon };
                    -1.0 / s.log10()
                })
                .sum(),
        };
        out.push(combined);
    }
    Ok(out)
}

/// Adds each card's count of uncertain transactions — score within the
/// closed band `[center − v, center + v]` — to its counter. Cards missing
/// from the map are inserted on first increment.
pub fn qfu_update<'a>(
    counters: &mut BTreeMap<String, u64>,
    day_scores: impl IntoIterator<Item = (&'a str, f64)>,
    v: f64,
    center: f64,
) -> Result<(), StrategyError> {
    if !(v > 0.0 && v < 0.5) {
        return Err(StrategyError::InvalidParam(format!(
            "uncertainty half-width must lie in (0, 0.5), found {v}"
        )));
    }
    for (card, score) in day_scores {
        if score >= center - v && score <= center + v {
            *counters.entry(card.to_string()).or_insert(0) += 1;
        }
    }
    Ok(())
}

/// The `k` cards with the highest counters, ties broken by ascending card
/// id. With everything at zero this degrades to the `k` lowest card ids.
pub fn qfu_select(counters: &BTreeMap<String, u64>, k: usize) -> Vec<String> {
    // BTreeMap iterates in ascending card id; a stable sort on the count
    // keeps that order within ties.
    let mut cards: Vec<(&String, &u64)> = counters.iter().collect();
    cards.sort_by(|a, b| b.1.cmp(a.1));
    cards.into_iter().take(k).map(|(c, _)| c.clone()).collect()
}
