//! Base classifiers over sparse count vectors.

mod lr;
mod mnb;
mod rf;

pub use lr::{lr_fit, BinaryProblem, LrConfig, LrModel};
pub use mnb::{mnb_fit, MnbConfig, MnbModel};
pub use rf::{rf_fit, DecisionTree, Node, RfConfig, RfModel};

use crate::error::{Error, Result};
use crate::features::SparseCountVector;

/// Absolute gap under which two class probabilities are treated as equal
/// when picking the predicted class.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A probability distribution over classes `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Accepts nonnegative probabilities summing to 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(format!("invalid probabilities {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Distribution(probs))
    }

    /// Normalizes nonnegative weights that have a positive sum.
    pub(crate) fn from_weights(mut weights: Vec<f64>) -> Self {
        let sum: f64 = weights.iter().sum();
        debug_assert!(sum > 0.0 && sum.is_finite());
        for w in &mut weights {
            *w /= sum;
        }
        Distribution(weights)
    }

    /// Wraps values already known to be a distribution up to rounding.
    pub(crate) fn from_probs_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Distribution(probs)
    }

    /// Softmax of log-scores with max-subtraction. Entries equal to -inf get
    /// probability 0; at least one score must be finite.
    pub(crate) fn from_log_scores(scores: &[f64]) -> Self {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        debug_assert!(max.is_finite());
        Self::from_weights(scores.iter().map(|s| (s - max).exp()).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable class. Probabilities within [`TIE_TOLERANCE`] of the
    /// maximum count as tied and the smallest tied index wins.
    pub fn argmax(&self) -> usize {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.0
            .iter()
            .position(|&p| p >= max - TIE_TOLERANCE)
            .expect("distribution is non-empty")
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Anything that turns a count vector into class probabilities.
pub trait Classifier {
    fn num_classes(&self) -> usize;

    fn dimension(&self) -> usize;

    fn predict_proba(&self, x: &SparseCountVector) -> Result<Distribution>;

    fn predict(&self, x: &SparseCountVector) -> Result<usize> {
        Ok(self.predict_proba(x)?.argmax())
    }
}
