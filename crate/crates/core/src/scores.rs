//! Probability scores over the label space and the confidence gate.

use crate::category::{Category, CATEGORY_COUNT};
use serde::{Deserialize, Serialize};

/// A probability distribution over the 15 categories.
///
/// Entries follow [`Category::ALL`] order and sum to 1 within 1e-6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    probs: Vec<f64>,
}

impl ClassScores {
    /// Builds scores from raw probabilities, checking the simplex invariants.
    pub fn new(probs: Vec<f64>) -> crate::Result<Self> {
        if probs.len() != CATEGORY_COUNT {
            return Err(crate::Error::invalid(format!(
                "expected {CATEGORY_COUNT} probabilities, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p) || !p.is_finite()) {
            return Err(crate::Error::invalid("probability outside [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(crate::Error::invalid(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(ClassScores { probs })
    }

    /// Softmax over raw scores; always yields a valid distribution.
    pub fn from_logits(logits: &[f64]) -> Self {
        assert_eq!(logits.len(), CATEGORY_COUNT);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        ClassScores { probs }
    }

    pub fn prob(&self, c: Category) -> f64 {
        self.probs[c.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Highest-probability category and its probability. Ties go to the
    /// category that comes first in canonical order.
    pub fn top(&self) -> (Category, f64) {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        (Category::from_index(best).unwrap(), self.probs[best])
    }

    /// The confidence gate: the argmax category when its probability
    /// reaches `threshold`, otherwise `Other`.
    ///
    /// `threshold` must be in (0, 1].
    pub fn decide(&self, threshold: f64) -> Category {
        assert!(
            threshold > 0.0 && threshold <= 1.0,
            "threshold must be in (0, 1]"
        );
        let (cat, p) = self.top();
        if p >= threshold {
            cat
        } else {
            Category::Other
        }
    }

    /// Plain argmax, no gate. Used for text decisions.
    pub fn argmax(&self) -> Category {
        self.top().0
    }
}

/// Default confidence threshold for accepting an image decision.
pub const DEFAULT_IMAGE_THRESHOLD: f64 = 0.80;
