//! Sampling rules.
//!
//! Every rule first plays each arm twice, in two round-robin passes, so that
//! the Jeffreys posteriors are proper. After that:
//!
//! - **BC-TE** draws a posterior sample for every arm. When the empirical
//!   leader and the sampled leader agree it plays the arm with the largest
//!   entry of the subgradient of `g` at the empirical allocation (best
//!   challenger step). Otherwise it plays the less-played of the two leaders
//!   (Thompson exploration).
//! - **Round robin** plays arm `t mod K`.
//! - **Track-and-Stop (D-tracking)** plays the least-played arm below the
//!   floor `sqrt(t) - K/2` if any, else the arm with the largest deficit
//!   `t w*_i(mu_hat) - N_i`.
//! - **T3C** takes the leader of one posterior sample, plays it with
//!   probability `beta`, otherwise plays the arm with the smallest
//!   transportation cost against it.
//!
//! Ties in every argmax/argmin go to the smaller play count, then the lower
//! index.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::sqrt;
use rand::Rng;

use crate::characteristic::{solve_w_star_at, subgradient_at, transport_cost};
use crate::model::{argmax, posterior_sample, ModelKind};
use crate::{Error, HistoryState, Result, DEFAULT_TOL};

/// A sampling rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Best challenger with Thompson exploration.
    BestChallengerTe,
    RoundRobin,
    /// Track-and-Stop with D-tracking and the `sqrt(t) - K/2` forced floor.
    TrackAndStop,
    /// Top-two Thompson sampling with transportation-cost challenger.
    TopTwo {
        beta: f64,
    },
}

impl PolicyKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicyKind::TopTwo { beta } if !(beta > 0.0 && beta < 1.0) => {
                Err(Error::InvalidArgument("top-two beta must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }

    /// Display name as used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::BestChallengerTe => "BC-TE",
            PolicyKind::RoundRobin => "RR",
            PolicyKind::TrackAndStop => "T-D",
            PolicyKind::TopTwo { .. } => "T3C",
        }
    }

    /// Stable 64-bit identifier used to derive per-run random streams.
    ///
    /// Top-two rules map to the bit pattern of `beta`, which lies below
    /// `0x3FF0_0000_0000_0000` for `beta` in (0, 1); the other rules use
    /// constants above that range, so distinct rules never share an id.
    pub fn stream_id(&self) -> u64 {
        match *self {
            PolicyKind::BestChallengerTe => u64::MAX,
            PolicyKind::RoundRobin => u64::MAX - 1,
            PolicyKind::TrackAndStop => u64::MAX - 2,
            PolicyKind::TopTwo { beta } => beta.to_bits(),
        }
    }
}

/// Parsing and printing use the tokens `bcte`, `rr`, `tasd` and `t3c:<beta>`
/// (`t3c` alone means `beta = 0.5`).
impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::BestChallengerTe => f.write_str("bcte"),
            PolicyKind::RoundRobin => f.write_str("rr"),
            PolicyKind::TrackAndStop => f.write_str("tasd"),
            PolicyKind::TopTwo { beta } => write!(f, "t3c:{beta}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        let policy = match lower.as_str() {
            "bcte" | "bc-te" => PolicyKind::BestChallengerTe,
            "rr" | "round-robin" => PolicyKind::RoundRobin,
            "tasd" | "t-d" | "tas" => PolicyKind::TrackAndStop,
            "t3c" => PolicyKind::TopTwo { beta: 0.5 },
            other => match other.strip_prefix("t3c:") {
                Some(b) => PolicyKind::TopTwo {
                    beta: b
                        .parse()
                        .map_err(|_| Error::InvalidArgument("t3c beta is not a number"))?,
                },
                None => return Err(Error::InvalidArgument("unknown policy")),
            },
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// Outcome of one call to [`select_arm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub arm: usize,
    /// Empirical leader `m(t)`, when the rule looked at it.
    pub leader: Option<usize>,
    /// Leader of the posterior sample, when one was drawn.
    pub sampled_leader: Option<usize>,
    /// The Thompson exploration branch was taken.
    pub explored: bool,
}

impl Selection {
    fn plain(arm: usize) -> Self {
        Self {
            arm,
            leader: None,
            sampled_leader: None,
            explored: false,
        }
    }
}

/// Argmax with ties broken by the smaller count, then the lower index.
fn argmax_fewest(values: &[f64], counts: &[u64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        let better =
            values[i] > values[best] || (values[i] == values[best] && counts[i] < counts[best]);
        if better {
            best = i;
        }
    }
    best
}

fn least_played<I: Iterator<Item = usize>>(arms: I, counts: &[u64]) -> Option<usize> {
    arms.min_by_key(|&i| (counts[i], i))
}

fn posterior_draws<R: Rng + ?Sized>(history: &HistoryState, rng: &mut R) -> Result<Vec<f64>> {
    history
        .arms()
        .iter()
        .map(|obs| posterior_sample(history.model(), obs, rng))
        .collect()
}

/// Chooses the next arm to play.
pub fn select_arm<R: Rng + ?Sized>(
    policy: &PolicyKind,
    history: &HistoryState,
    rng: &mut R,
) -> Result<Selection> {
    let counts = history.counts();
    if let Some(arm) = least_played(0..counts.len(), &counts) {
        if counts[arm] < 2 {
            return Ok(Selection::plain(arm));
        }
    }
    match *policy {
        PolicyKind::BestChallengerTe => best_challenger_te(history, &counts, rng),
        PolicyKind::RoundRobin => Ok(Selection::plain(
            (history.t() % counts.len() as u64) as usize,
        )),
        PolicyKind::TrackAndStop => Ok(d_tracking(history, &counts)),
        PolicyKind::TopTwo { beta } => top_two(history, beta, rng),
    }
}

fn best_challenger_te<R: Rng + ?Sized>(
    history: &HistoryState,
    counts: &[u64],
    rng: &mut R,
) -> Result<Selection> {
    let means = history.empirical_means();
    let leader = argmax(&means);
    let sampled = argmax(&posterior_draws(history, rng)?);
    if leader == sampled {
        let v = subgradient_at(history.model(), &means, leader, &history.weights(), 0.0);
        Ok(Selection {
            arm: argmax_fewest(&v, counts),
            leader: Some(leader),
            sampled_leader: Some(sampled),
            explored: false,
        })
    } else {
        let arm = least_played([leader, sampled].into_iter(), counts).unwrap_or(leader);
        Ok(Selection {
            arm,
            leader: Some(leader),
            sampled_leader: Some(sampled),
            explored: true,
        })
    }
}

fn d_tracking(history: &HistoryState, counts: &[u64]) -> Selection {
    let k = counts.len();
    let t = history.t() as f64;
    let floor = sqrt(t) - k as f64 / 2.0;
    let starved = (0..k).filter(|&i| (counts[i] as f64) < floor);
    let means = history.empirical_means();
    let leader = argmax(&means);
    if let Some(arm) = least_played(starved, counts) {
        return Selection {
            arm,
            leader: Some(leader),
            sampled_leader: None,
            explored: false,
        };
    }
    let target = match solve_w_star_at(history.model(), &means, leader, DEFAULT_TOL) {
        Ok((w, _)) => w,
        // tied or degenerate empirical leaders: track the uniform allocation
        Err(_) => alloc::vec![1.0 / k as f64; k],
    };
    let deficit: Vec<f64> = (0..k).map(|i| t * target[i] - counts[i] as f64).collect();
    Selection {
        arm: argmax_fewest(&deficit, counts),
        leader: Some(leader),
        sampled_leader: None,
        explored: false,
    }
}

fn top_two<R: Rng + ?Sized>(history: &HistoryState, beta: f64, rng: &mut R) -> Result<Selection> {
    let sampled = argmax(&posterior_draws(history, rng)?);
    let means = history.empirical_means();
    let arm = if rng.random::<f64>() < beta {
        sampled
    } else {
        challenger(history.model(), &means, &history.weights(), sampled)
    };
    Ok(Selection {
        arm,
        leader: Some(argmax(&means)),
        sampled_leader: Some(sampled),
        explored: false,
    })
}

/// `argmin_{j != leader}` of the pairwise transportation cost against
/// `leader`; arms whose empirical mean is at least the leader's cost zero.
fn challenger(model: &ModelKind, means: &[f64], w: &[f64], leader: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_cost = f64::INFINITY;
    for j in 0..means.len() {
        if j == leader {
            continue;
        }
        let cost = if means[leader] > means[j] {
            transport_cost(model, means[leader], means[j], w[leader], w[j])
        } else {
            0.0
        };
        if best == usize::MAX || cost < best_cost {
            best = j;
            best_cost = cost;
        }
    }
    best
}
