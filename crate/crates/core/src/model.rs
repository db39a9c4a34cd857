//! Exponential-family reward models on the mean scale.
//!
//! Every public API takes means; natural parameters only appear inside the
//! closed forms. The divergence `d(mu, mu')` is the Kullback-Leibler
//! divergence between the members of the family with means `mu` and `mu'`.
//!
//! # Jeffreys posteriors
//!
//! For a family with log-partition `A`, the Jeffreys prior is proportional to
//! `sqrt(A''(theta))` and the posterior after `n` observations with sufficient
//! statistic `s` is proportional to `sqrt(A''(theta)) exp(theta s - n A(theta))`.
//! The conjugate forms used by [`posterior_sample`]:
//!
//! - Bernoulli: `A(theta) = log(1 + e^theta)`. On the mean scale the prior is
//!   `p^(-1/2) (1-p)^(-1/2)`, i.e. Beta(1/2, 1/2), so after `s` successes in
//!   `n` trials the posterior mean parameter is Beta(s + 1/2, n - s + 1/2).
//! - Gaussian with known variance `sigma2`: `A''` is constant, the prior is
//!   flat and the posterior on the mean is Normal(s / n, sigma2 / n).
//! - Poisson: the prior on the rate is `lambda^(-1/2)`, so the posterior is
//!   Gamma(shape s + 1/2, rate n).
//! - Exponential: the prior on the rate is `1 / lambda`, the posterior on the
//!   rate is Gamma(shape n, rate s) and the mean is its reciprocal.
//! - Pareto with known scale `c`: the sufficient statistic is
//!   `sum log(x / c)`, the prior on the shape is `1 / theta`, so the posterior
//!   is Gamma(shape n, rate sum log x - n log c). The implied mean is
//!   `c theta / (theta - 1)`; a draw with `theta <= 1` has no finite mean and
//!   is reported as `f64::INFINITY`, which outranks every finite mean when
//!   arms are compared but never reaches a divergence.

use libm::{log, log1p, sqrt};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma, Normal, Pareto, Poisson};

use crate::{Error, Result};

use alloc::vec::Vec;

/// Reward distribution family of a bandit instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Rewards in {0, 1}; means in (0, 1).
    Bernoulli,
    /// Gaussian rewards with known variance; means on the whole real line.
    Gaussian { sigma2: f64 },
    /// Poisson counts; means in (0, inf).
    Poisson,
    /// Exponential rewards; means in (0, inf).
    Exponential,
    /// Pareto rewards with known scale; means in (scale, inf).
    Pareto { scale: f64 },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Bernoulli => "bernoulli",
            ModelKind::Gaussian { .. } => "gaussian",
            ModelKind::Poisson => "poisson",
            ModelKind::Exponential => "exponential",
            ModelKind::Pareto { .. } => "pareto",
        }
    }

    /// Checks the model parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelKind::Gaussian { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => Err(
                Error::InvalidModel("gaussian variance must be positive and finite"),
            ),
            ModelKind::Pareto { scale } if !(scale > 0.0 && scale.is_finite()) => Err(
                Error::InvalidModel("pareto scale must be positive and finite"),
            ),
            _ => Ok(()),
        }
    }

    /// Open interval of admissible means.
    pub fn mean_domain(&self) -> (f64, f64) {
        match *self {
            ModelKind::Bernoulli => (0.0, 1.0),
            ModelKind::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ModelKind::Poisson | ModelKind::Exponential => (0.0, f64::INFINITY),
            ModelKind::Pareto { scale } => (scale, f64::INFINITY),
        }
    }

    /// Whether `mu` lies strictly inside the mean domain.
    pub fn contains(&self, mu: f64) -> bool {
        let (lo, hi) = self.mean_domain();
        mu.is_finite() && lo < mu && mu < hi
    }

    /// Whether `mu` lies in the closure of the mean domain (finite endpoints
    /// only). Empirical means live here.
    pub fn contains_closure(&self, mu: f64) -> bool {
        let (lo, hi) = self.mean_domain();
        mu.is_finite() && lo <= mu && mu <= hi
    }

    fn check_closure(&self, mu: f64) -> Result<()> {
        if self.contains_closure(mu) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                model: self.name(),
                value: mu,
            })
        }
    }

    /// Divergence without argument checks. Arguments may sit on a finite
    /// boundary of the domain, where the limit value is returned
    /// (`0 log 0 = 0`, possibly `+inf`).
    #[inline]
    pub fn divergence(&self, x: f64, y: f64) -> f64 {
        if x == y {
            return 0.0;
        }
        let d = match *self {
            ModelKind::Bernoulli => xlogxy(x, y) + xlogxy(1.0 - x, 1.0 - y),
            ModelKind::Gaussian { sigma2 } => (x - y) * (x - y) / (2.0 * sigma2),
            ModelKind::Poisson => {
                if y == 0.0 {
                    f64::INFINITY
                } else {
                    xlogxy(x, y) + y - x
                }
            }
            ModelKind::Exponential => {
                if x == 0.0 || y == 0.0 {
                    f64::INFINITY
                } else {
                    ratio_divergence(x / y)
                }
            }
            ModelKind::Pareto { scale } => {
                // theta'/theta with theta = mu / (mu - scale)
                let (ex, ey) = (x - scale, y - scale);
                if ex <= 0.0 || ey <= 0.0 {
                    f64::INFINITY
                } else {
                    ratio_divergence(y * ex / (x * ey))
                }
            }
        };
        if d > 0.0 {
            d
        } else {
            0.0
        }
    }

    /// Shape parameter of the Pareto member with mean `mu`.
    fn pareto_shape(scale: f64, mu: f64) -> f64 {
        mu / (mu - scale)
    }
}

/// `x log(x / y)` with `0 log 0 = 0`.
#[inline]
fn xlogxy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * log(x / y)
    }
}

/// `r - 1 - log r`, accurate near `r = 1`.
#[inline]
fn ratio_divergence(r: f64) -> f64 {
    let u = r - 1.0;
    u - log1p(u)
}

/// Divergence `d(mu, mu_prime)` between two members of `model`.
///
/// Both means must lie in the closure of the mean domain. Boundary values
/// follow the usual limits, e.g. `d(0, y) = -log(1 - y)` for Bernoulli.
pub fn kl_div(model: &ModelKind, mu: f64, mu_prime: f64) -> Result<f64> {
    model.validate()?;
    model.check_closure(mu)?;
    model.check_closure(mu_prime)?;
    Ok(model.divergence(mu, mu_prime))
}

/// `(w_a mu_a + w_b mu_b) / (w_a + w_b)`.
pub fn weighted_mean(mu_a: f64, mu_b: f64, w_a: f64, w_b: f64) -> Result<f64> {
    if !(w_a >= 0.0 && w_b >= 0.0 && w_a.is_finite() && w_b.is_finite()) {
        return Err(Error::InvalidArgument(
            "weights must be finite and non-negative",
        ));
    }
    if w_a + w_b <= 0.0 {
        return Err(Error::InvalidArgument("weights must not both be zero"));
    }
    Ok(mix(mu_a, mu_b, w_a, w_b))
}

/// Weighted mean for callers that already know `w_a + w_b > 0`.
#[inline]
pub(crate) fn mix(mu_a: f64, mu_b: f64, w_a: f64, w_b: f64) -> f64 {
    mu_a + (w_b / (w_a + w_b)) * (mu_b - mu_a)
}

/// A bandit problem: a reward model and the arm means.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    model: ModelKind,
    means: Vec<f64>,
    best: usize,
}

impl Instance {
    /// Builds an instance; the best arm must be unique and every mean must be
    /// strictly inside the model's mean domain. Means need not be sorted.
    pub fn new(model: ModelKind, means: Vec<f64>) -> Result<Self> {
        model.validate()?;
        if means.len() < 2 {
            return Err(Error::TooFewArms(means.len()));
        }
        for &mu in &means {
            if !model.contains(mu) {
                return Err(Error::OutOfDomain {
                    model: model.name(),
                    value: mu,
                });
            }
        }
        let best = argmax(&means);
        if let Some(tied) = (0..means.len()).find(|&i| i != best && means[i] == means[best]) {
            return Err(Error::TiedBest(best, tied));
        }
        Ok(Self { model, means, best })
    }

    pub fn model(&self) -> &ModelKind {
        &self.model
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn best(&self) -> usize {
        self.best
    }

    /// Lowest-index arm with the largest mean among the suboptimal arms.
    pub fn second_best(&self) -> usize {
        let mut second = if self.best == 0 { 1 } else { 0 };
        for i in 0..self.means.len() {
            if i != self.best && self.means[i] > self.means[second] {
                second = i;
            }
        }
        second
    }

    /// `mu_best - mu_second`.
    pub fn gap(&self) -> f64 {
        self.means[self.best] - self.means[self.second_best()]
    }

    pub(crate) fn check_arm(&self, i: usize) -> Result<()> {
        if i >= self.means.len() {
            Err(Error::ArmOutOfRange {
                index: i,
                arms: self.means.len(),
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_suboptimal(&self, i: usize) -> Result<()> {
        self.check_arm(i)?;
        if i == self.best {
            Err(Error::BestArm(i))
        } else {
            Ok(())
        }
    }
}

/// Index of the largest value, lowest index on ties. `+inf` outranks every
/// finite value; NaN never wins.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Sufficient statistics of one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmObservations {
    pub count: u64,
    pub sum: f64,
    /// Sum of `log x`, tracked for the Pareto model only.
    pub sum_log: f64,
}

impl ArmObservations {
    pub fn push(&mut self, model: &ModelKind, x: f64) {
        self.count += 1;
        self.sum += x;
        if let ModelKind::Pareto { .. } = model {
            self.sum_log += log(x);
        }
    }

    /// Empirical mean; NaN before the first observation.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Per-arm reward sampler; built once per arm and reused.
#[derive(Debug, Clone, Copy)]
pub enum RewardDist {
    Bernoulli(f64),
    Gaussian(Normal<f64>),
    Poisson(Poisson<f64>),
    Exponential(Exp<f64>),
    Pareto(Pareto<f64>),
}

impl RewardDist {
    pub fn new(model: &ModelKind, mu: f64) -> Result<Self> {
        model.validate()?;
        if !model.contains(mu) {
            return Err(Error::OutOfDomain {
                model: model.name(),
                value: mu,
            });
        }
        fn bad<E>(_: E) -> Error {
            Error::InvalidArgument("reward distribution rejected its parameters")
        }
        Ok(match *model {
            ModelKind::Bernoulli => RewardDist::Bernoulli(mu),
            ModelKind::Gaussian { sigma2 } => {
                RewardDist::Gaussian(Normal::new(mu, sqrt(sigma2)).map_err(bad)?)
            }
            ModelKind::Poisson => RewardDist::Poisson(Poisson::new(mu).map_err(bad)?),
            ModelKind::Exponential => RewardDist::Exponential(Exp::new(1.0 / mu).map_err(bad)?),
            ModelKind::Pareto { scale } => {
                let shape = ModelKind::pareto_shape(scale, mu);
                RewardDist::Pareto(Pareto::new(scale, shape).map_err(bad)?)
            }
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RewardDist::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            RewardDist::Gaussian(d) => d.sample(rng),
            RewardDist::Poisson(d) => d.sample(rng),
            RewardDist::Exponential(d) => d.sample(rng),
            RewardDist::Pareto(d) => d.sample(rng),
        }
    }
}

/// One reward draw from the member of `model` with mean `mu`.
pub fn sample_reward<R: Rng + ?Sized>(model: &ModelKind, mu: f64, rng: &mut R) -> Result<f64> {
    Ok(RewardDist::new(model, mu)?.sample(rng))
}

/// Minimum number of observations before the Jeffreys posterior is proper
/// for every model.
pub const MIN_POSTERIOR_COUNT: u64 = 2;

/// Draws a mean from the Jeffreys posterior given an arm's statistics.
///
/// Pareto draws whose shape is at most one have infinite mean and come back
/// as `f64::INFINITY`.
pub fn posterior_sample<R: Rng + ?Sized>(
    model: &ModelKind,
    obs: &ArmObservations,
    rng: &mut R,
) -> Result<f64> {
    if obs.count < MIN_POSTERIOR_COUNT {
        return Err(Error::TooFewObservations {
            count: obs.count,
            required: MIN_POSTERIOR_COUNT,
        });
    }
    let n = obs.count as f64;
    fn bad<E>(_: E) -> Error {
        Error::InvalidObservations("posterior parameters are not valid")
    }
    match *model {
        ModelKind::Bernoulli => {
            if !(obs.sum >= 0.0 && obs.sum <= n) {
                return Err(Error::InvalidObservations(
                    "bernoulli successes exceed trials",
                ));
            }
            Ok(Beta::new(obs.sum + 0.5, n - obs.sum + 0.5)
                .map_err(bad)?
                .sample(rng))
        }
        ModelKind::Gaussian { sigma2 } => {
            model.validate()?;
            Ok(Normal::new(obs.sum / n, sqrt(sigma2 / n))
                .map_err(bad)?
                .sample(rng))
        }
        ModelKind::Poisson => {
            if obs.sum < 0.0 {
                return Err(Error::InvalidObservations("negative poisson total"));
            }
            Ok(Gamma::new(obs.sum + 0.5, 1.0 / n).map_err(bad)?.sample(rng))
        }
        ModelKind::Exponential => {
            if !(obs.sum > 0.0) {
                return Err(Error::InvalidObservations(
                    "exponential total must be positive",
                ));
            }
            let rate = Gamma::new(n, 1.0 / obs.sum).map_err(bad)?.sample(rng);
            Ok(1.0 / rate)
        }
        ModelKind::Pareto { scale } => {
            model.validate()?;
            let rate = obs.sum_log - n * log(scale);
            if !(rate > 0.0) {
                return Err(Error::InvalidObservations(
                    "pareto observations must exceed the scale",
                ));
            }
            let shape = Gamma::new(n, 1.0 / rate).map_err(bad)?.sample(rng);
            if shape <= 1.0 {
                Ok(f64::INFINITY)
            } else {
                Ok(scale * shape / (shape - 1.0))
            }
        }
    }
}
