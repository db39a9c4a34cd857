//! Stopping replay against a stored trajectory.
//!
//! `fixtures/bern5_bcte_delta0.1.txt` holds one BC-TE run on the five-arm
//! Bernoulli instance at `delta = 0.1` (master seed 20240601, run 0): a header
//! `tau <n>` followed by one `arm reward` line per round. Regenerate with
//! `BAI_WRITE_FIXTURE=1 cargo test -p bai-core --test golden`.

use std::fmt::Write as _;
use std::path::PathBuf;

use bai_core::model::MIN_POSTERIOR_COUNT;
use bai_core::run::{run_observed, run_seed, streams, RunSpec};
use bai_core::stopping::should_stop;
use bai_core::{HistoryState, Instance, ModelKind, PolicyKind, ThresholdKind};

const SEED: u64 = 20_240_601;
const DELTA: f64 = 0.1;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bern5_bcte_delta0.1.txt")
}

fn live_run(inst: &Instance) -> (u64, Vec<(usize, f64)>) {
    let policy = PolicyKind::BestChallengerTe;
    let spec = RunSpec {
        instance: inst,
        policy,
        threshold: ThresholdKind::HeuristicLogLog,
        delta: DELTA,
        horizon_cap: 1_000_000,
    };
    let (mut env, mut rng) = streams(run_seed(SEED, policy.stream_id(), DELTA, 0));
    let mut steps = Vec::new();
    let out = run_observed(&spec, &mut env, &mut rng, |s| {
        steps.push((s.selection.arm, s.reward))
    })
    .unwrap();
    assert!(!out.truncated);
    (out.tau, steps)
}

fn parse(text: &str) -> (u64, Vec<(usize, f64)>) {
    let mut lines = text.lines();
    let tau = lines
        .next()
        .and_then(|l| l.strip_prefix("tau "))
        .and_then(|v| v.parse().ok())
        .expect("header");
    let steps = lines
        .map(|l| {
            let (a, r) = l.split_once(' ').expect("arm reward");
            (a.parse().unwrap(), r.parse().unwrap())
        })
        .collect();
    (tau, steps)
}

#[test]
fn replay_stops_at_recorded_round() {
    let inst = Instance::new(ModelKind::Bernoulli, vec![0.3, 0.21, 0.2, 0.19, 0.18]).unwrap();
    if std::env::var_os("BAI_WRITE_FIXTURE").is_some() {
        let (tau, steps) = live_run(&inst);
        let mut out = format!("tau {tau}\n");
        for (a, r) in &steps {
            writeln!(out, "{a} {r}").unwrap();
        }
        std::fs::write(fixture_path(), out).unwrap();
    }
    let (tau, steps) = parse(&std::fs::read_to_string(fixture_path()).unwrap());
    assert_eq!(steps.len() as u64, tau);

    // offline: first crossing of the stored rewards
    let mut h = HistoryState::new(ModelKind::Bernoulli, 5).unwrap();
    let mut stopped_at = None;
    for &(arm, reward) in &steps {
        h.record(arm, reward);
        if h.all_played(MIN_POSTERIOR_COUNT) {
            let d = should_stop(&h, &ThresholdKind::HeuristicLogLog, DELTA).unwrap();
            assert_eq!(d.stop, d.statistic > d.threshold);
            if d.stop {
                stopped_at = Some(h.t());
                break;
            }
        }
    }
    assert_eq!(stopped_at, Some(tau));

    // online: the same seed reproduces the trajectory
    let (live_tau, live_steps) = live_run(&inst);
    assert_eq!(live_tau, tau);
    assert_eq!(live_steps, steps);
}
