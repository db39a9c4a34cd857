//! Chernoff's generalized likelihood ratio stopping rule.
//!
//! The statistic is `max_a min_{b != a} Z_{a,b}(t)` with the signed pairwise
//! statistic `Z_{a,b} = sign(mu_a - mu_b) * t * f_{a,b}(w^t; mu_hat)`, where
//! `f_{a,b}` is the transportation cost between the two arms. For the
//! empirical leader every `Z` is non-negative, for any other arm at least one
//! is non-positive, so the outer maximum sits at the leader and the statistic
//! reduces to `min_{b != leader} t f_{leader,b}`. Empirical ties cost zero,
//! so exact ties never stop the run.

use core::fmt;
use core::str::FromStr;

use libm::{log, pow};

use crate::characteristic::{min_transport_at, transport_cost};
use crate::{Error, HistoryState, Result};

/// Stopping threshold `beta(t, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdKind {
    /// `log((log t + 1) / delta)`, the threshold used in the experiments.
    HeuristicLogLog,
    /// `log(c t^alpha / delta)` with `c > 0` and `alpha` in `[1, e/2]`.
    Deviational { c: f64, alpha: f64 },
}

impl ThresholdKind {
    /// Default deviational constants for `k` arms: `c = K`, `alpha = 1.2`.
    pub fn deviational_default(k: usize) -> Self {
        ThresholdKind::Deviational {
            c: k as f64,
            alpha: 1.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdKind::HeuristicLogLog => Ok(()),
            ThresholdKind::Deviational { c, alpha } => {
                if !(c > 0.0 && c.is_finite()) {
                    Err(Error::InvalidArgument("deviational c must be positive"))
                } else if !(1.0..=core::f64::consts::E / 2.0).contains(&alpha) {
                    Err(Error::InvalidArgument(
                        "deviational alpha must lie in [1, e/2]",
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `beta(t, delta)`; `t` is clamped to at least one.
    pub fn value(&self, t: u64, delta: f64) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            ThresholdKind::HeuristicLogLog => log((log(t) + 1.0) / delta),
            ThresholdKind::Deviational { c, alpha } => log(c * pow(t, alpha) / delta),
        }
    }
}

/// Tokens: `heuristic` and `deviational:<c>:<alpha>`; see [`parse_threshold`]
/// for the bare `deviational` form.
impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdKind::HeuristicLogLog => f.write_str("heuristic"),
            ThresholdKind::Deviational { c, alpha } => write!(f, "deviational:{c}:{alpha}"),
        }
    }
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_threshold(s, None)
    }
}

/// Parses a threshold token; plain `deviational` takes the defaults for
/// `num_arms` arms and is an error when the arm count is unknown.
pub fn parse_threshold(s: &str, num_arms: Option<usize>) -> Result<ThresholdKind> {
    let lower = s.trim().to_ascii_lowercase();
    let kind = match lower.as_str() {
        "heuristic" | "loglog" => ThresholdKind::HeuristicLogLog,
        "deviational" => match num_arms {
            Some(k) => ThresholdKind::deviational_default(k),
            None => {
                return Err(Error::InvalidArgument(
                    "deviational threshold needs c and alpha",
                ))
            }
        },
        other => {
            let rest = other
                .strip_prefix("deviational:")
                .ok_or(Error::InvalidArgument("unknown threshold"))?;
            let (c, alpha) = rest
                .split_once(':')
                .ok_or(Error::InvalidArgument("expected deviational:<c>:<alpha>"))?;
            ThresholdKind::Deviational {
                c: c.parse()
                    .map_err(|_| Error::InvalidArgument("bad deviational c"))?,
                alpha: alpha
                    .parse()
                    .map_err(|_| Error::InvalidArgument("bad deviational alpha"))?,
            }
        }
    };
    kind.validate()?;
    Ok(kind)
}

/// `beta(t, delta)` for `kind`.
pub fn threshold(kind: &ThresholdKind, t: u64, delta: f64) -> f64 {
    kind.value(t, delta)
}

fn check_history(history: &HistoryState) -> Result<()> {
    if !history.all_played(1) {
        return Err(Error::TooFewObservations {
            count: 0,
            required: 1,
        });
    }
    Ok(())
}

fn counts_f64(history: &HistoryState) -> alloc::vec::Vec<f64> {
    history.counts().iter().map(|&n| n as f64).collect()
}

/// GLR statistic and the arm attaining the outer maximum (the empirical
/// leader). Uses `t f(w^t) = f(N)` since the cost is homogeneous in the
/// weights.
pub fn glr_statistic(history: &HistoryState) -> Result<(f64, usize)> {
    check_history(history)?;
    let means = history.empirical_means();
    let leader = history.leader();
    let n = counts_f64(history);
    Ok((
        min_transport_at(history.model(), &means, leader, &n),
        leader,
    ))
}

/// The statistic evaluated as the full signed max-min over every pair.
pub fn glr_statistic_full(history: &HistoryState) -> Result<(f64, usize)> {
    check_history(history)?;
    let means = history.empirical_means();
    let n = counts_f64(history);
    let model = history.model();
    let k = means.len();
    let mut best = (f64::NEG_INFINITY, 0);
    for a in 0..k {
        let mut inner = f64::INFINITY;
        for b in (0..k).filter(|&b| b != a) {
            let z = if means[a] > means[b] {
                transport_cost(model, means[a], means[b], n[a], n[b])
            } else if means[a] < means[b] {
                -transport_cost(model, means[b], means[a], n[b], n[a])
            } else {
                0.0
            };
            inner = inner.min(z);
        }
        if inner > best.0 {
            best = (inner, a);
        }
    }
    Ok(best)
}

/// Result of one stopping check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingDecision {
    pub stop: bool,
    pub recommended: usize,
    pub statistic: f64,
    pub threshold: f64,
}

/// Stops iff the GLR statistic exceeds `beta(t, delta)`.
pub fn should_stop(
    history: &HistoryState,
    kind: &ThresholdKind,
    delta: f64,
) -> Result<StoppingDecision> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument("delta must lie in (0, 1)"));
    }
    let (statistic, recommended) = glr_statistic(history)?;
    let threshold = kind.value(history.t(), delta);
    Ok(StoppingDecision {
        stop: statistic > threshold,
        recommended,
        statistic,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArmObservations, ModelKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::string::ToString;
    use std::vec;
    use std::vec::Vec;

    fn obs(count: u64, sum: f64) -> ArmObservations {
        ArmObservations {
            count,
            sum,
            sum_log: 0.0,
        }
    }

    #[test]
    fn threshold_examples() {
        let h = ThresholdKind::HeuristicLogLog;
        assert!((h.value(1, 0.1) - core::f64::consts::LN_10).abs() < 1e-12);
        let d = ThresholdKind::Deviational { c: 1.0, alpha: 1.0 };
        assert!((d.value(10, 0.1) - 4.605170185988092).abs() < 1e-12);
        for t in 1..2000u64 {
            assert!(h.value(t + 1, 0.1) >= h.value(t, 0.1));
            assert!(h.value(t, 0.01) > h.value(t, 0.1));
        }
    }

    #[test]
    fn threshold_validation_and_tokens() {
        assert!(ThresholdKind::Deviational { c: 1.0, alpha: 1.4 }
            .validate()
            .is_err());
        assert!(ThresholdKind::Deviational { c: 0.0, alpha: 1.2 }
            .validate()
            .is_err());
        assert!(ThresholdKind::deviational_default(5).validate().is_ok());
        let d = ThresholdKind::Deviational { c: 3.0, alpha: 1.1 };
        assert_eq!(d.to_string().parse::<ThresholdKind>().unwrap(), d);
        assert_eq!(
            parse_threshold("deviational", Some(4)).unwrap(),
            ThresholdKind::Deviational { c: 4.0, alpha: 1.2 }
        );
        assert!("deviational".parse::<ThresholdKind>().is_err());
        assert!("nope".parse::<ThresholdKind>().is_err());
    }

    #[test]
    fn all_equal_means() {
        let h = HistoryState::from_observations(
            ModelKind::Bernoulli,
            vec![obs(4, 2.0), obs(6, 3.0), obs(2, 1.0)],
        )
        .unwrap();
        assert_eq!(glr_statistic(&h).unwrap(), (0.0, 0));
        assert_eq!(glr_statistic_full(&h).unwrap(), (0.0, 0));
        assert!(
            !should_stop(&h, &ThresholdKind::HeuristicLogLog, 0.999)
                .unwrap()
                .stop
        );
    }

    #[test]
    fn two_arm_gaussian() {
        let g = ModelKind::Gaussian { sigma2: 1.0 };
        for n in [1u64, 7, 100] {
            let h =
                HistoryState::from_observations(g, vec![obs(n, n as f64), obs(n, 0.0)]).unwrap();
            let (s, a) = glr_statistic(&h).unwrap();
            assert_eq!(a, 0);
            assert!((s - n as f64 / 4.0).abs() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn empty_arm_is_an_error() {
        let h = HistoryState::new(ModelKind::Bernoulli, 2).unwrap();
        assert!(glr_statistic(&h).is_err());
    }

    #[test]
    fn shortcut_matches_full_max_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let models = [
            ModelKind::Bernoulli,
            ModelKind::Gaussian { sigma2: 2.0 },
            ModelKind::Poisson,
            ModelKind::Exponential,
        ];
        for model in models {
            for _ in 0..200 {
                let k = rng.random_range(2..7);
                let arms: Vec<ArmObservations> = (0..k)
                    .map(|_| {
                        let n = rng.random_range(1..60u64);
                        let mean = match model {
                            ModelKind::Bernoulli => rng.random_range(0..=n) as f64 / n as f64,
                            ModelKind::Gaussian { .. } => rng.random_range(-2.0..2.0),
                            _ => rng.random_range(0.1..3.0),
                        };
                        obs(n, mean * n as f64)
                    })
                    .collect();
                let h = HistoryState::from_observations(model, arms).unwrap();
                let (a, ia) = glr_statistic(&h).unwrap();
                let (b, ib) = glr_statistic_full(&h).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
                assert!(a >= 0.0);
                if a > 0.0 {
                    assert_eq!(ia, ib);
                }
            }
        }
    }

    #[test]
    fn proportional_growth_never_decreases_the_statistic() {
        let b = ModelKind::Bernoulli;
        let mut prev = 0.0;
        for scale in 1..50u64 {
            let h = HistoryState::from_observations(
                b,
                vec![
                    obs(4 * scale, 3.0 * scale as f64),
                    obs(2 * scale, 1.0 * scale as f64),
                ],
            )
            .unwrap();
            let (s, _) = glr_statistic(&h).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn stops_as_delta_approaches_one() {
        let b = ModelKind::Bernoulli;
        let h = HistoryState::from_observations(b, vec![obs(2, 2.0), obs(2, 1.0)]).unwrap();
        let (s, _) = glr_statistic(&h).unwrap();
        assert!(s > 0.0);
        let h = HistoryState::from_observations(b, vec![obs(200, 200.0), obs(200, 100.0)]).unwrap();
        assert!(
            should_stop(&h, &ThresholdKind::HeuristicLogLog, 1.0 - 1e-9)
                .unwrap()
                .stop
        );
        assert!(should_stop(&h, &ThresholdKind::HeuristicLogLog, 1.0).is_err());
    }

    #[test]
    fn initial_state_does_not_stop_on_reference_instances() {
        let cases: Vec<(ModelKind, Vec<f64>)> = vec![
            (ModelKind::Bernoulli, vec![0.3, 0.21, 0.2, 0.19, 0.18]),
            (
                ModelKind::Gaussian { sigma2: 1.0 },
                vec![1.0, 0.85, 0.8, 0.7],
            ),
            (ModelKind::Exponential, vec![0.5, 0.45, 0.43, 0.4, 0.3]),
            (ModelKind::Pareto { scale: 1.0 }, vec![5.0, 3.0, 2.0, 1.5]),
        ];
        for (model, means) in cases {
            // two plays per arm at the true means
            let arms = means.iter().map(|&m| obs(2, 2.0 * m)).collect();
            let h = HistoryState::from_observations(model, arms).unwrap();
            for delta in [0.2, 0.1, 0.01, 0.001] {
                assert!(
                    !should_stop(&h, &ThresholdKind::HeuristicLogLog, delta)
                        .unwrap()
                        .stop
                );
            }
        }
    }
}
