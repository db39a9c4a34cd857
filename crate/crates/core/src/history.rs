//! Per-arm play counts and reward sums.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{argmax, ArmObservations, ModelKind};
use crate::{Error, Result};

/// Observation history of one run: `N_i(t)`, reward sums and the round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    model: ModelKind,
    arms: Vec<ArmObservations>,
    t: u64,
}

impl HistoryState {
    pub fn new(model: ModelKind, num_arms: usize) -> Result<Self> {
        model.validate()?;
        if num_arms < 2 {
            return Err(Error::TooFewArms(num_arms));
        }
        Ok(Self {
            model,
            arms: vec![ArmObservations::default(); num_arms],
            t: 0,
        })
    }

    /// Builds a history from per-arm statistics.
    pub fn from_observations(model: ModelKind, arms: Vec<ArmObservations>) -> Result<Self> {
        let mut h = Self::new(model, arms.len())?;
        for a in &arms {
            if a.count == 0 && (a.sum != 0.0 || a.sum_log != 0.0) {
                return Err(Error::InvalidObservations("empty arm with a non-zero sum"));
            }
            if model == ModelKind::Bernoulli && !(a.sum >= 0.0 && a.sum <= a.count as f64) {
                return Err(Error::InvalidObservations(
                    "bernoulli successes exceed trials",
                ));
            }
        }
        h.t = arms.iter().map(|a| a.count).sum();
        h.arms = arms;
        Ok(h)
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.arms[arm].push(&self.model, reward);
        self.t += 1;
    }

    pub fn model(&self) -> &ModelKind {
        &self.model
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmObservations] {
        &self.arms
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.arms[arm].count
    }

    pub fn counts(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.count).collect()
    }

    /// Empirical means; NaN for arms never played.
    pub fn empirical_means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmObservations::mean).collect()
    }

    /// Empirical proportions `N_i(t) / t`.
    pub fn weights(&self) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.arms.iter().map(|a| a.count as f64 / t).collect()
    }

    /// Empirical best arm, lowest index on ties.
    pub fn leader(&self) -> usize {
        argmax(&self.empirical_means())
    }

    /// Every arm has been played at least `n` times.
    pub fn all_played(&self, n: u64) -> bool {
        self.arms.iter().all(|a| a.count >= n)
    }
}
