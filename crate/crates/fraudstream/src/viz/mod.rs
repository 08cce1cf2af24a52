//! Projection and plotting support: standardized PCA, class-conditional
//! density grids in the projected plane, score-distribution diagnostics,
//! and file exports (CSV grids plus a self-contained SVG figure).
//!
//! Everything here is pure given its inputs; exports are deterministic so
//! re-running a figure command reproduces the files byte for byte.

mod density;
mod export;
mod pca;
mod report;

pub use density::{density_grid, DensityGrid};
pub use export::export_overlay;
pub use pca::{fit_pca, BaselineMode, PcaModel};
pub use report::{score_report, write_score_report, ScoreBin};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("need at least {need} samples for {dims} features, got {got}")]
    TooFewSamples {
        need: usize,
        got: usize,
        dims: usize,
    },
    #[error("feature vectors differ in length: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("requested {requested} components but the model has {available}")]
    DimsOutOfRange { requested: usize, available: usize },
    #[error("class '{0}' has fewer than 2 points")]
    TooFewPoints(&'static str),
    #[error("empty input")]
    EmptyInput,
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("bins must be >= 1")]
    BadBins,
    #[error("grid resolution must be >= 2")]
    BadResolution,
    #[error("bandwidth must be positive and finite")]
    BadBandwidth,
    #[error("non-finite input value")]
    NonFinite,
    #[error("paired lists differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
