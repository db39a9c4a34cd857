//! Instrumented fixed-horizon runs without stopping.

use alloc::vec::Vec;

use crate::model::{RewardDist, MIN_POSTERIOR_COUNT};
use crate::policy::{select_arm, PolicyKind};
use crate::run::{run_seed, streams};
use crate::{Error, HistoryState, Instance, Result};

/// One recorded round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub arm: usize,
    pub reward: f64,
    /// Empirical leader before the play, when the rule looked at it.
    pub leader: Option<usize>,
    /// Posterior-sample leader, when one was drawn.
    pub sampled_leader: Option<usize>,
    /// Thompson exploration branch.
    pub te: bool,
}

/// Plays `policy` for exactly `horizon` rounds. The random streams are the
/// ones a harness run with master seed `seed`, run index 0 and `delta = 0`
/// would use.
pub fn policy_trace(
    inst: &Instance,
    policy: PolicyKind,
    horizon: u64,
    seed: u64,
) -> Result<Vec<TraceStep>> {
    policy.validate()?;
    if horizon < MIN_POSTERIOR_COUNT * inst.num_arms() as u64 {
        return Err(Error::InvalidArgument(
            "horizon is shorter than initialization",
        ));
    }
    let model = *inst.model();
    let dists: Vec<RewardDist> = inst
        .means()
        .iter()
        .map(|&mu| RewardDist::new(&model, mu))
        .collect::<Result<_>>()?;
    let (mut env, mut rng) = streams(run_seed(seed, policy.stream_id(), 0.0, 0));
    let mut history = HistoryState::new(model, inst.num_arms())?;
    let mut steps = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        let sel = select_arm(&policy, &history, &mut rng)?;
        let reward = dists[sel.arm].sample(&mut env);
        history.record(sel.arm, reward);
        steps.push(TraceStep {
            arm: sel.arm,
            reward,
            leader: sel.leader,
            sampled_leader: sel.sampled_leader,
            te: sel.explored,
        });
    }
    Ok(steps)
}

/// [`policy_trace`] for BC-TE.
pub fn bcte_trace(inst: &Instance, horizon: u64, seed: u64) -> Result<Vec<TraceStep>> {
    policy_trace(inst, PolicyKind::BestChallengerTe, horizon, seed)
}

/// Play counts after each prefix of a trace, `counts[t][i] = N_i(t + 1)`.
pub fn count_path(steps: &[TraceStep], num_arms: usize) -> Vec<Vec<u64>> {
    let mut n = alloc::vec![0u64; num_arms];
    steps
        .iter()
        .map(|s| {
            n[s.arm] += 1;
            n.clone()
        })
        .collect()
}
