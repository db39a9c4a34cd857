//! Summary statistics and tests used by the aggregates.

use statrs::distribution::{Beta, ContinuousCDF, StudentsT};

use crate::error::{LabError, Result};

/// Mean and unbiased standard deviation; `None` for an empty sample, zero
/// spread for a single value.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// One-sided Welch test of `mean_a < mean_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Welch's t statistic with Welch–Satterthwaite degrees of freedom and the
/// one-sided p-value for the alternative `mean_a < mean_b`.
pub fn welch_one_sided(a: &[f64], b: &[f64], alpha: f64) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(LabError::Runtime(
            "welch test needs two samples of size >= 2".into(),
        ));
    }
    let (ma, sa) = mean_std(a).unwrap();
    let (mb, sb) = mean_std(b).unwrap();
    let (va, vb) = (sa * sa / a.len() as f64, sb * sb / b.len() as f64);
    if va + vb == 0.0 {
        if ma == mb {
            return Ok(WelchResult {
                t: 0.0,
                df: f64::INFINITY,
                p_value: 0.5,
                significant: 0.5 < alpha,
            });
        }
        return Err(LabError::Runtime(
            "welch test on two zero-variance samples".into(),
        ));
    }
    let t = (ma - mb) / (va + vb).sqrt();
    let df =
        (va + vb).powi(2) / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let p_value = student_t_cdf(t, df);
    Ok(WelchResult {
        t,
        df,
        p_value,
        significant: p_value < alpha,
    })
}

/// `P(T <= t)` for Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .map(|d| d.cdf(t))
        .unwrap_or(f64::NAN)
}

/// One-sided Clopper–Pearson upper confidence bound for a binomial
/// proportion with `successes` out of `n` at level `confidence`.
pub fn binomial_upper(successes: u64, n: u64, confidence: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if successes >= n {
        return 1.0;
    }
    Beta::new(successes as f64 + 1.0, (n - successes) as f64)
        .map(|b| b.inverse_cdf(confidence))
        .unwrap_or(1.0)
}
