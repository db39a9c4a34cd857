//! Ratios of the characteristic times over growing instance families.

use std::fmt;
use std::str::FromStr;

use bai_core::{CharacteristicTimes, Instance, ModelKind, DEFAULT_TOL};
use serde::Serialize;

use crate::error::{LabError, Result};

/// Instance families indexed by the number of arms `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `(0.3, 0.21, 0.21 - 0.001, ..., 0.21 - 0.001 (K - 2))`
    Mu1,
    /// `(0.9, 0.7, 0.7 - 0.001, ..., 0.7 - 0.001 (K - 2))`
    Mu2,
    /// `(0.3, 0.21, ..., 0.21)`: every suboptimal arm tied with the second.
    Worst,
}

impl Family {
    pub fn means(&self, k: usize) -> Vec<f64> {
        let (top, second, step) = match self {
            Family::Mu1 => (0.3, 0.21, 0.001),
            Family::Mu2 => (0.9, 0.7, 0.001),
            Family::Worst => (0.3, 0.21, 0.0),
        };
        std::iter::once(top)
            .chain((0..k.saturating_sub(1)).map(|j| second - step * j as f64))
            .collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Mu1 => "mu1",
            Family::Mu2 => "mu2",
            Family::Worst => "worst",
        })
    }
}

impl FromStr for Family {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mu1" => Ok(Family::Mu1),
            "mu2" => Ok(Family::Mu2),
            "worst" => Ok(Family::Worst),
            other => Err(LabError::Config(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: String,
    #[serde(rename = "K")]
    pub k: usize,
    /// Balanced time over `T*`.
    pub ratio_lower: f64,
    /// `T^{1/2}` over `T*`.
    pub ratio_half: f64,
}

/// A `K` value left out of the table, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropped {
    pub model: String,
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub dropped: Vec<Dropped>,
}

/// Ratios for every `K` in `ks`. Values of `K` whose means leave the model's
/// domain are recorded in `dropped`; solver failures abort the sweep.
pub fn ratio_sweep(model: ModelKind, family: Family, ks: &[usize]) -> Result<SweepTable> {
    model.validate()?;
    let mut table = SweepTable::default();
    for &k in ks {
        let inst = match Instance::new(model, family.means(k)) {
            Ok(inst) => inst,
            Err(e) => {
                table.dropped.push(Dropped {
                    model: model.name().into(),
                    k,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let ct = CharacteristicTimes::compute(&inst, DEFAULT_TOL).map_err(LabError::Solver)?;
        table.rows.push(SweepRow {
            model: model.name().into(),
            k,
            ratio_lower: ct.t_lower / ct.t_star,
            ratio_half: ct.t_beta / ct.t_star,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_means() {
        assert_eq!(Family::Mu1.means(4), vec![0.3, 0.21, 0.209, 0.208]);
        assert_eq!(Family::Worst.means(3), vec![0.3, 0.21, 0.21]);
        assert_eq!(Family::Mu2.means(2), vec![0.9, 0.7]);
    }

    #[test]
    fn two_arm_rows_are_one() {
        for model in [
            ModelKind::Bernoulli,
            ModelKind::Poisson,
            ModelKind::Exponential,
        ] {
            let t = ratio_sweep(model, Family::Mu1, &[2]).unwrap();
            assert!((t.rows[0].ratio_lower - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn out_of_domain_sizes_are_dropped() {
        let t = ratio_sweep(ModelKind::Bernoulli, Family::Mu1, &[10, 212, 300]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(
            t.dropped.iter().map(|d| d.k).collect::<Vec<_>>(),
            vec![212, 300]
        );
    }

    #[test]
    fn worst_case_gaussian_stays_below_two() {
        let g = ModelKind::Gaussian { sigma2: 1.0 };
        let t = ratio_sweep(g, Family::Worst, &[3, 10, 50, 200]).unwrap();
        let r: Vec<f64> = t.rows.iter().map(|r| r.ratio_lower).collect();
        assert!(r.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{r:?}");
        assert!(r.iter().all(|&x| (1.0..2.0).contains(&x)), "{r:?}");
    }
}
