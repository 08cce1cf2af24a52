//! Weighted average of a slow "delayed" model trained on matured labels and
//! a fast "feedback" model trained on investigator answers.

use super::{check_dimension, ModelError, Scorer};

/// Combines two scorers as `w_delayed * delayed + (1 - w_delayed) * feedback`.
///
/// The sub-models are attached after construction; scoring with a missing
/// sub-model is a state error, which keeps accidental half-configured
/// ensembles from silently scoring with one opinion.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble<S> {
    w_delayed: f64,
    delayed: Option<S>,
    feedback: Option<S>,
}

impl<S: Scorer> WeightedEnsemble<S> {
    pub fn new(w_delayed: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&w_delayed) {
            return Err(ModelError::InvalidConfig(format!(
                "ensemble weight must lie in [0, 1], found {w_delayed}"
            )));
        }
        Ok(Self {
            w_delayed,
            delayed: None,
            feedback: None,
        })
    }

    pub fn with_models(w_delayed: f64, delayed: S, feedback: S) -> Result<Self, ModelError> {
        if delayed.n_features() != feedback.n_features() {
            return Err(ModelError::DimensionMismatch {
                expected: delayed.n_features(),
                found: feedback.n_features(),
            });
        }
        let mut e = Self::new(w_delayed)?;
        e.delayed = Some(delayed);
        e.feedback = Some(feedback);
        Ok(e)
    }

    pub fn set_delayed(&mut self, model: S) {
        self.delayed = Some(model);
    }

    pub fn set_feedback(&mut self, model: S) {
        self.feedback = Some(model);
    }

    pub fn w_delayed(&self) -> f64 {
        self.w_delayed
    }
}

impl<S: Scorer> Scorer for WeightedEnsemble<S> {
    fn n_features(&self) -> usize {
        self.delayed
            .as_ref()
            .or(self.feedback.as_ref())
            .map_or(0, |m| m.n_features())
    }

    fn score(&self, features: &[f64]) -> Result<f64, ModelError> {
        let delayed = self
            .delayed
            .as_ref()
            .ok_or(ModelError::Untrained { role: "delayed" })?;
        let feedback = self
            .feedback
            .as_ref()
            .ok_or(ModelError::Untrained { role: "feedback" })?;
        check_dimension(delayed.n_features(), features)?;
        let d = delayed.score(features)?;
        let f = feedback.score(features)?;
        Ok(self.w_delayed * d + (1.0 - self.w_delayed) * f)
    }
}
