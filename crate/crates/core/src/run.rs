//! The select / observe / stop loop.
//!
//! Each run owns two independent ChaCha8 streams derived from one 32-byte
//! seed: stream 0 draws rewards, stream 1 feeds the sampling rule. The seed
//! is the concatenation of the master seed, the policy stream id, the bits of
//! `delta` and the run index, so distinct runs never share a stream.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{RewardDist, MIN_POSTERIOR_COUNT};
use crate::policy::{select_arm, PolicyKind, Selection};
use crate::stopping::{should_stop, StoppingDecision, ThresholdKind};
use crate::{Error, HistoryState, Instance, Result};

/// Everything that determines one run besides its random streams.
#[derive(Debug, Clone, Copy)]
pub struct RunSpec<'a> {
    pub instance: &'a Instance,
    pub policy: PolicyKind,
    pub threshold: ThresholdKind,
    pub delta: f64,
    /// Rounds after which an unstopped run is abandoned.
    pub horizon_cap: u64,
}

impl RunSpec<'_> {
    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.threshold.validate()?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument("delta must lie in (0, 1)"));
        }
        let init = MIN_POSTERIOR_COUNT * self.instance.num_arms() as u64;
        if self.horizon_cap < init {
            return Err(Error::InvalidArgument(
                "horizon cap is shorter than initialization",
            ));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    /// Stopping round, or the horizon cap when truncated.
    pub tau: u64,
    pub recommended: usize,
    /// Recommendation is the true best arm; always false when truncated.
    pub correct: bool,
    pub truncated: bool,
    /// Rounds that took the Thompson exploration branch.
    pub te_rounds: u64,
    /// Last stopping check, if any was made.
    pub last_decision: Option<StoppingDecision>,
}

/// One round as seen by an observer of [`run_observed`].
#[derive(Debug)]
pub struct Step<'a> {
    pub selection: Selection,
    pub reward: f64,
    /// History after recording the reward.
    pub history: &'a HistoryState,
    /// Stopping check made this round, if any.
    pub decision: Option<StoppingDecision>,
}

/// 32-byte run seed: `master || stream_id || delta bits || run_index`,
/// each little-endian.
pub fn run_seed(master_seed: u64, stream_id: u64, delta: f64, run_index: u64) -> [u8; 32] {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&stream_id.to_le_bytes());
    seed[16..24].copy_from_slice(&delta.to_bits().to_le_bytes());
    seed[24..].copy_from_slice(&run_index.to_le_bytes());
    seed
}

/// Environment and policy streams for a seed.
pub fn streams(seed: [u8; 32]) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut env = ChaCha8Rng::from_seed(seed);
    env.set_stream(0);
    let mut policy = ChaCha8Rng::from_seed(seed);
    policy.set_stream(1);
    (env, policy)
}

/// Runs until the stopping rule fires or the horizon cap is reached.
pub fn run_to_stop<E: Rng + ?Sized, P: Rng + ?Sized>(
    spec: &RunSpec<'_>,
    env_rng: &mut E,
    policy_rng: &mut P,
) -> Result<RunOutcome> {
    run_observed(spec, env_rng, policy_rng, |_| {})
}

/// [`run_to_stop`] with a callback after every round.
///
/// Stopping is checked every round once every arm has been played twice.
pub fn run_observed<E, P, F>(
    spec: &RunSpec<'_>,
    env_rng: &mut E,
    policy_rng: &mut P,
    mut observer: F,
) -> Result<RunOutcome>
where
    E: Rng + ?Sized,
    P: Rng + ?Sized,
    F: FnMut(&Step<'_>),
{
    spec.validate()?;
    let inst = spec.instance;
    let model = *inst.model();
    let dists: Vec<RewardDist> = inst
        .means()
        .iter()
        .map(|&mu| RewardDist::new(&model, mu))
        .collect::<Result<_>>()?;
    let mut history = HistoryState::new(model, inst.num_arms())?;
    let mut te_rounds = 0;
    let mut last_decision = None;
    while history.t() < spec.horizon_cap {
        let selection = select_arm(&spec.policy, &history, policy_rng)?;
        te_rounds += u64::from(selection.explored);
        let reward = dists[selection.arm].sample(env_rng);
        history.record(selection.arm, reward);
        let decision = if history.all_played(MIN_POSTERIOR_COUNT) {
            Some(should_stop(&history, &spec.threshold, spec.delta)?)
        } else {
            None
        };
        observer(&Step {
            selection,
            reward,
            history: &history,
            decision,
        });
        if let Some(d) = decision {
            last_decision = Some(d);
            if d.stop {
                return Ok(RunOutcome {
                    tau: history.t(),
                    recommended: d.recommended,
                    correct: d.recommended == inst.best(),
                    truncated: false,
                    te_rounds,
                    last_decision,
                });
            }
        }
    }
    Ok(RunOutcome {
        tau: spec.horizon_cap,
        recommended: history.leader(),
        correct: false,
        truncated: true,
        te_rounds,
        last_decision,
    })
}
