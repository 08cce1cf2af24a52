//! The strategy catalogue: who gets investigated today, and what else the
//! model is fed.
//!
//! Every day the simulator has `k` investigator slots. A strategy decides
//! how to spend them and what extra (cheap, unverified) training signal to
//! add:
//!
//! * `HRQ` — spend all `k` slots on the highest-risk transactions.
//! * `EAL-R/P/U/M` — keep `k−q` high-risk slots, spend `q` on exploration:
//!   random, PCA-outlier, uncertainty (score near the decision boundary), or
//!   a mixed uncertainty/random split.
//! * `SR/SU/SM/SE` — exploit all `k` slots, and additionally pseudo-label
//!   `m` unqueried transactions as genuine (random, most uncertain, mixed,
//!   or lowest-risk picks) without consulting any oracle.
//! * `SR-U/SR-R/SR-M` — SR's pseudo-labelling plus an exploration budget.
//! * `SRN[p]` — SR, but only a fraction `p` of the investigators' *genuine*
//!   answers is kept for training (`SRN[100]` ≡ `SR`).
//! * `ROS/SMOTE` — exploit all `k` slots and oversample the genuine class
//!   with `m` synthetic samples per day.
//! * `QFU` — card-level selection by per-card counts of uncertain
//!   transactions.
//! * `MF-*/SM-*/LF-*` — card-level pipelines: per-transaction scores are
//!   combined into card scores by max, softmax, or logarithmic pooling, and
//!   whole cards are alerted.

mod cards;
mod oversample;
mod select;

pub use cards::{combine_card_scores, qfu_select, qfu_update};
pub use oversample::oversample;
pub use select::{explore_select, hrq_select, srn_filter, sssl_pseudo_label, OutlierScorer};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("unknown strategy id '{0}'")]
    UnknownId(String),
    #[error("invalid strategy spec: {0}")]
    InvalidSpec(String),
    #[error("exploration mode P requires an outlier model")]
    MissingOutlierModel,
    #[error("empty bag for card {0}")]
    EmptyBag(String),
    #[error("card {card} has out-of-range score {score}")]
    ScoreOutOfRange { card: String, score: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// How the exploration budget is spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExploreMode {
    Random,
    PcaOutlier,
    Uncertainty,
    Mixed,
}

/// How pseudo-genuine labels are picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PseudoMode {
    Random,
    Uncertainty,
    Mixed,
    LowestRisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OversampleMode {
    Ros,
    Smote,
}

/// Card-score combining function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combining {
    Max,
    Softmax,
    Logarithmic,
}

/// A strategy mnemonic. Parses from / displays as the catalogue names
/// (`HRQ`, `EAL-U`, `SR`, `SRN[75]`, `MF-SR`, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyId {
    /// Highest-risk queries only.
    Hrq,
    /// Exploitation plus an exploration budget.
    Eal(ExploreMode),
    /// Exploitation plus pseudo-genuine labels.
    Sssl(PseudoMode),
    /// SR pseudo-labelling plus an exploration budget.
    SsslHybrid(ExploreMode),
    /// SR keeping only `percent`% of genuine investigator feedback.
    Srn { percent: u32 },
    /// Exploitation plus synthetic genuine oversampling.
    Oversample(OversampleMode),
    /// Card selection by uncertainty counters.
    Qfu,
    /// A card-level pipeline: combine transaction scores per card, then run
    /// the base strategy over cards.
    Combined {
        combining: Combining,
        base: Box<StrategyId>,
    },
}

impl StrategyId {
    /// The transaction-level behaviour underneath any combining prefix.
    pub fn base(&self) -> &StrategyId {
        match self {
            StrategyId::Combined { base, .. } => base.base(),
            other => other,
        }
    }

    pub fn combining(&self) -> Option<Combining> {
        match self {
            StrategyId::Combined { combining, .. } => Some(*combining),
            _ => None,
        }
    }

    pub fn explore_mode(&self) -> Option<ExploreMode> {
        match self.base() {
            StrategyId::Eal(m) | StrategyId::SsslHybrid(m) => Some(*m),
            _ => None,
        }
    }

    pub fn pseudo_mode(&self) -> Option<PseudoMode> {
        match self.base() {
            StrategyId::Sssl(m) => Some(*m),
            StrategyId::SsslHybrid(_) | StrategyId::Srn { .. } => Some(PseudoMode::Random),
            _ => None,
        }
    }

    pub fn oversample_mode(&self) -> Option<OversampleMode> {
        match self.base() {
            StrategyId::Oversample(m) => Some(*m),
            _ => None,
        }
    }

    pub fn is_qfu(&self) -> bool {
        matches!(self.base(), StrategyId::Qfu)
    }

    /// Fraction of genuine investigator feedback kept for training.
    pub fn retained_negatives(&self) -> f64 {
        match self.base() {
            StrategyId::Srn { percent } => f64::from(*percent) / 100.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyId::Hrq => write!(f, "HRQ"),
            StrategyId::Eal(m) => {
                let c = match m {
                    ExploreMode::Random => 'R',
                    ExploreMode::PcaOutlier => 'P',
                    ExploreMode::Uncertainty => 'U',
                    ExploreMode::Mixed => 'M',
                };
                write!(f, "EAL-{c}")
            }
            StrategyId::Sssl(m) => {
                let s = match m {
                    PseudoMode::Random => "SR",
                    PseudoMode::Uncertainty => "SU",
                    PseudoMode::Mixed => "SM",
                    PseudoMode::LowestRisk => "SE",
                };
                write!(f, "{s}")
            }
            StrategyId::SsslHybrid(m) => {
                let c = match m {
                    ExploreMode::Random => 'R',
                    ExploreMode::Uncertainty => 'U',
                    ExploreMode::Mixed => 'M',
                    ExploreMode::PcaOutlier => 'P',
                };
                write!(f, "SR-{c}")
            }
            StrategyId::Srn { percent } => write!(f, "SRN[{percent}]"),
            StrategyId::Oversample(OversampleMode::Ros) => write!(f, "ROS"),
            StrategyId::Oversample(OversampleMode::Smote) => write!(f, "SMOTE"),
            StrategyId::Qfu => write!(f, "QFU"),
            StrategyId::Combined { combining, base } => {
                let p = match combining {
                    Combining::Max => "MF",
                    Combining::Softmax => "SM",
                    Combining::Logarithmic => "LF",
                };
                write!(f, "{p}-{base}")
            }
        }
    }
}

impl FromStr for StrategyId {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let plain = |s: &str| -> Option<StrategyId> {
            Some(match s {
                "HRQ" => StrategyId::Hrq,
                "EAL-R" => StrategyId::Eal(ExploreMode::Random),
                "EAL-P" => StrategyId::Eal(ExploreMode::PcaOutlier),
                "EAL-U" => StrategyId::Eal(ExploreMode::Uncertainty),
                "EAL-M" => StrategyId::Eal(ExploreMode::Mixed),
                "SR" => StrategyId::Sssl(PseudoMode::Random),
                "SU" => StrategyId::Sssl(PseudoMode::Uncertainty),
                "SM" => StrategyId::Sssl(PseudoMode::Mixed),
                "SE" => StrategyId::Sssl(PseudoMode::LowestRisk),
                "SR-R" => StrategyId::SsslHybrid(ExploreMode::Random),
                "SR-U" => StrategyId::SsslHybrid(ExploreMode::Uncertainty),
                "SR-M" => StrategyId::SsslHybrid(ExploreMode::Mixed),
                "ROS" => StrategyId::Oversample(OversampleMode::Ros),
                "SMOTE" => StrategyId::Oversample(OversampleMode::Smote),
                "QFU" => StrategyId::Qfu,
                _ => return None,
            })
        };
        if let Some(id) = plain(s) {
            return Ok(id);
        }
        if let Some(rest) = s.strip_prefix("SRN[").and_then(|r| r.strip_suffix(']')) {
            let percent: u32 = rest
                .parse()
                .map_err(|_| StrategyError::UnknownId(s.to_string()))?;
            if percent > 100 {
                return Err(StrategyError::InvalidSpec(format!(
                    "SRN retention {percent}% exceeds 100%"
                )));
            }
            return Ok(StrategyId::Srn { percent });
        }
        for (prefix, combining) in [
            ("MF-", Combining::Max),
            ("SM-", Combining::Softmax),
            ("LF-", Combining::Logarithmic),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                // "SM-..." could be the SM pseudo strategy only when the rest
                // is not itself a strategy, so try the combined reading first.
                if let Ok(base) = rest.parse::<StrategyId>() {
                    match base {
                        StrategyId::Combined { .. } => {
                            return Err(StrategyError::InvalidSpec(format!(
                                "'{s}': combining prefixes cannot be nested"
                            )))
                        }
                        StrategyId::Qfu => {
                            return Err(StrategyError::InvalidSpec(format!(
                                "'{s}': QFU selects cards directly and takes no combining prefix"
                            )))
                        }
                        base => {
                            return Ok(StrategyId::Combined {
                                combining,
                                base: Box::new(base),
                            })
                        }
                    }
                }
            }
        }
        Err(StrategyError::UnknownId(s.to_string()))
    }
}

/// A scored, still-unlabeled transaction a strategy can pick from.
#[derive(Debug, Clone, Copy)]
pub struct PoolItem<'a> {
    pub trx_id: &'a str,
    pub card_id: &'a str,
    /// Current model's fraud probability, in `[0, 1]`.
    pub score: f64,
    pub features: &'a [f64],
}

/// One day's selection decision.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selection {
    /// Highest-risk picks (up to `k − q`).
    pub exploit: Vec<String>,
    /// Exploration picks (up to `q`).
    pub explore: Vec<String>,
    /// Ids pseudo-labeled genuine without investigation (up to `m`).
    pub pseudo_genuine: Vec<String>,
}

impl Selection {
    pub fn queried(&self) -> impl Iterator<Item = &str> {
        self.exploit
            .iter()
            .chain(self.explore.iter())
            .map(String::as_str)
    }

    /// Checks pairwise disjointness of the three id sets.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.exploit
            .iter()
            .chain(self.explore.iter())
            .chain(self.pseudo_genuine.iter())
            .all(|id| seen.insert(id.as_str()))
    }
}

/// The per-transaction scores observed on one card.
#[derive(Debug, Clone, PartialEq)]
pub struct CardBag {
    pub card_id: String,
    pub scores: Vec<f64>,
}

/// Full parameterization of one strategy in an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub id: StrategyId,
    /// Total daily alert budget.
    pub k: usize,
    /// Exploration share of `k` (used only by exploring strategies).
    pub q: usize,
    /// Daily pseudo-label / oversampling budget.
    pub m: usize,
    /// Uncertainty share in mixed picks.
    pub mix_ratio: f64,
    /// Half-width of the uncertainty band used by QFU.
    pub uncertainty_halfwidth: f64,
    /// Softmax sharpness for SM combining.
    pub softmax_alpha: f64,
    /// Floor ε for LF combining.
    pub log_floor: f64,
    pub seed: u64,
}

impl StrategySpec {
    pub fn new(id: StrategyId) -> Self {
        Self {
            id,
            k: 100,
            q: 5,
            m: 1000,
            mix_ratio: 0.7,
            uncertainty_halfwidth: 0.05,
            softmax_alpha: 1.0,
            log_floor: 1e-3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.q > self.k {
            return Err(StrategyError::InvalidSpec(format!(
                "exploration budget q={} exceeds alert budget k={}",
                self.q, self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.mix_ratio) {
            return Err(StrategyError::InvalidSpec(format!(
                "mix ratio must lie in [0, 1], found {}",
                self.mix_ratio
            )));
        }
        if !(self.uncertainty_halfwidth > 0.0 && self.uncertainty_halfwidth < 0.5) {
            return Err(StrategyError::InvalidSpec(format!(
                "uncertainty half-width must lie in (0, 0.5), found {}",
                self.uncertainty_halfwidth
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(StrategyError::InvalidSpec(format!(
                "log floor must be positive, found {}",
                self.log_floor
            )));
        }
        if !self.softmax_alpha.is_finite() {
            return Err(StrategyError::InvalidSpec(
                "softmax alpha must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Exploration slots actually used by this strategy's id.
    pub fn explore_budget(&self) -> usize {
        if self.id.explore_mode().is_some() {
            self.q
        } else {
            0
        }
    }

    /// Pseudo-label slots actually used by this strategy's id.
    pub fn pseudo_budget(&self) -> usize {
        if self.id.pseudo_mode().is_some() {
            self.m
        } else {
            0
        }
    }

    /// Synthetic oversampling budget actually used by this strategy's id.
    pub fn oversample_budget(&self) -> usize {
        if self.id.oversample_mode().is_some() {
            self.m
        } else {
            0
        }
    }
}

/// `⌈ratio · total⌉` with a guard against float noise like `0.7 × 10 =
/// 7.000000000000001`, clamped to `total`.
pub(crate) fn ceil_share(ratio: f64, total: usize) -> usize {
    let raw = (ratio * total as f64 - 1e-9).ceil();
    (raw.max(0.0) as usize).min(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_through_strings() {
        let ids = [
            "HRQ", "EAL-R", "EAL-P", "EAL-U", "EAL-M", "SR", "SU", "SM", "SE", "SR-U", "SR-R",
            "SR-M", "SRN[75]", "SRN[0]", "ROS", "SMOTE", "QFU", "MF-SR", "SM-SR", "LF-SR",
            "MF-HRQ", "LF-SR-U", "SM-SM",
        ];
        for id in ids {
            let parsed: StrategyId = id.parse().unwrap();
            assert_eq!(parsed.to_string(), id, "{id}");
        }
    }

    #[test]
    fn bad_ids_are_rejected() {
        for id in ["", "XYZ", "EAL-X", "SRN[101]", "SRN[x]", "MF-QFU", "MF-MF-SR", "SM-U"] {
            assert!(id.parse::<StrategyId>().is_err(), "{id}");
        }
    }

    #[test]
    fn srn_100_behaves_like_sr() {
        let srn: StrategyId = "SRN[100]".parse().unwrap();
        assert_eq!(srn.retained_negatives(), 1.0);
        assert_eq!(srn.pseudo_mode(), Some(PseudoMode::Random));
        let srn40: StrategyId = "SRN[40]".parse().unwrap();
        assert!((srn40.retained_negatives() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn combined_ids_delegate_to_their_base() {
        let id: StrategyId = "LF-SR-U".parse().unwrap();
        assert_eq!(id.combining(), Some(Combining::Logarithmic));
        assert_eq!(id.explore_mode(), Some(ExploreMode::Uncertainty));
        assert_eq!(id.pseudo_mode(), Some(PseudoMode::Random));
        let sm_sm: StrategyId = "SM-SM".parse().unwrap();
        assert_eq!(sm_sm.combining(), Some(Combining::Softmax));
        assert_eq!(sm_sm.pseudo_mode(), Some(PseudoMode::Mixed));
    }

    #[test]
    fn budgets_follow_the_id_semantics() {
        let spec = |id: &str| StrategySpec::new(id.parse().unwrap());
        assert_eq!(spec("HRQ").explore_budget(), 0);
        assert_eq!(spec("HRQ").pseudo_budget(), 0);
        assert_eq!(spec("EAL-U").explore_budget(), 5);
        assert_eq!(spec("EAL-U").pseudo_budget(), 0);
        assert_eq!(spec("SR").explore_budget(), 0);
        assert_eq!(spec("SR").pseudo_budget(), 1000);
        assert_eq!(spec("SR-M").explore_budget(), 5);
        assert_eq!(spec("SR-M").pseudo_budget(), 1000);
        assert_eq!(spec("ROS").oversample_budget(), 1000);
        assert_eq!(spec("ROS").pseudo_budget(), 0);
    }

    #[test]
    fn spec_validation_catches_bad_parameters() {
        let mut spec = StrategySpec::new(StrategyId::Hrq);
        spec.q = 200;
        assert!(spec.validate().is_err());
        let mut spec = StrategySpec::new(StrategyId::Hrq);
        spec.uncertainty_halfwidth = 0.5;
        assert!(spec.validate().is_err());
        let mut spec = StrategySpec::new(StrategyId::Hrq);
        spec.log_floor = 0.0;
        assert!(spec.validate().is_err());
        assert!(StrategySpec::new(StrategyId::Hrq).validate().is_ok());
    }

    #[test]
    fn ceil_share_is_exact_on_awkward_floats() {
        assert_eq!(ceil_share(0.7, 10), 7);
        assert_eq!(ceil_share(0.7, 9), 7); // 6.3 rounds up
        assert_eq!(ceil_share(0.0, 10), 0);
        assert_eq!(ceil_share(1.0, 10), 10);
        assert_eq!(ceil_share(0.5, 10), 5);
        assert_eq!(ceil_share(0.3, 3), 1); // 0.8999... rounds up
    }
}
