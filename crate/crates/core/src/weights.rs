use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::{Error, Result};

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Normalizes non-negative finite entries to sum to one.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidWeights("no entries"));
        }
        if raw.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights(
                "entries must be finite and non-negative",
            ));
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidWeights(
                "entries must have a positive finite sum",
            ));
        }
        Ok(Self(raw.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    /// Empirical proportions `N_i / t`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        Self::new(counts.iter().map(|&n| n as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All entries strictly positive.
    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&w| w > 0.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for Weights {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes() {
        let w = Weights::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
        let sum: f64 = Weights::new(vec![0.1; 7]).unwrap().as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(Weights::new(vec![]).is_err());
        assert!(Weights::new(vec![0.0, 0.0]).is_err());
        assert!(Weights::new(vec![-0.1, 1.1]).is_err());
        assert!(Weights::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn interior() {
        assert!(Weights::uniform(3).is_interior());
        assert!(!Weights::new(vec![0.0, 1.0]).unwrap().is_interior());
        assert_eq!(Weights::from_counts(&[2, 6]).unwrap()[1], 0.75);
    }
}
