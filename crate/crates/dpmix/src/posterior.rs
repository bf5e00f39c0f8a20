//! A normalized distribution over the number of clusters t ∈ {1, …, n},
//! kept alongside the unnormalized log-domain weights it came from.

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, LogSumAcc};

/// Distribution over the number of clusters (or components) t ∈ {1, …, n}.
///
/// `log_joint[t−1]` holds the log of the unnormalized weight of t — for the
/// exact posterior that is log p(x_{1:n}, T_n = t); for the CRP prior it is
/// log p(t). `probs` is the normalized counterpart. Index i corresponds to
/// t = i + 1 throughout; the accessors take t directly.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorOverT {
    log_joint: Vec<f64>,
    probs: Vec<f64>,
}

impl PosteriorOverT {
    /// Normalize a vector of log-domain weights indexed by t−1. Entries may
    /// be −∞ (impossible values of t), but at least one must be finite and
    /// none may be NaN or +∞.
    pub fn from_log_weights(log_joint: Vec<f64>) -> Result<Self> {
        if log_joint.is_empty() {
            return Err(Error::InvalidArgument(
                "distribution over t needs at least one entry".into(),
            ));
        }
        if log_joint.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::InvalidArgument(
                "log weights must be finite or −∞".into(),
            ));
        }
        let total = log_sum_exp(&log_joint);
        if total == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(
                "all log weights are −∞; distribution undefined".into(),
            ));
        }
        let probs = log_joint.iter().map(|w| (w - total).exp()).collect();
        Ok(PosteriorOverT { log_joint, probs })
    }

    /// Largest representable t (the number of items n).
    pub fn n(&self) -> usize {
        self.log_joint.len()
    }

    /// Unnormalized log weight of t (1-based). Panics if t is out of range.
    pub fn log_joint(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.n(), "t = {t} out of range");
        self.log_joint[t - 1]
    }

    /// Probability of t (1-based). Panics if t is out of range.
    pub fn prob(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.n(), "t = {t} out of range");
        self.probs[t - 1]
    }

    /// All unnormalized log weights, index i ↔ t = i + 1.
    pub fn log_joints(&self) -> &[f64] {
        &self.log_joint
    }

    /// All probabilities, index i ↔ t = i + 1.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// log Σ_t exp(log_joint[t]): for the exact posterior this is the total
    /// log marginal likelihood log p(x_{1:n}).
    pub fn log_normalizer(&self) -> f64 {
        // Recomputed (rather than stored) so the result is insensitive to
        // the construction path; it folds n terms at most.
        let mut acc = LogSumAcc::new();
        for &w in &self.log_joint {
            acc.add(w);
        }
        acc.total()
    }

    /// The most probable t; ties resolve to the smallest t.
    pub fn mode(&self) -> usize {
        let mut best = 0usize;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best + 1
    }
}
