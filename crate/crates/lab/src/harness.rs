//! Replicated runs, aggregation and lower-bound reference values.
//!
//! Every run draws from its own pair of ChaCha8 streams keyed by
//! `(master_seed, policy, delta, run_index)`, so the output of
//! [`run_experiment`] depends only on the configuration, never on the number
//! of workers or on scheduling order.

use std::collections::BTreeMap;
use std::time::Instant;

use bai_core::characteristic::t_star;
use bai_core::run::{run_seed, run_to_stop, streams, RunSpec};
use bai_core::{Instance, PolicyKind, ThresholdKind, DEFAULT_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::stats::{mean_std, welch_one_sided};

/// Default cap on rounds per run.
pub const DEFAULT_HORIZON_CAP: u64 = 1_000_000;

/// Significance level of the pairwise Welch tests.
pub const WELCH_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: Instance,
    pub policies: Vec<PolicyKind>,
    pub deltas: Vec<f64>,
    pub n_runs: u64,
    pub master_seed: u64,
    pub threshold: ThresholdKind,
    pub horizon_cap: u64,
    /// Record wall-clock time per step. Off by default so that output files
    /// are reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(instance: Instance, policies: Vec<PolicyKind>, deltas: Vec<f64>) -> Self {
        let threshold = ThresholdKind::HeuristicLogLog;
        Self {
            instance,
            policies,
            deltas,
            n_runs: 100,
            master_seed: 0,
            threshold,
            horizon_cap: DEFAULT_HORIZON_CAP,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: &str| Err(LabError::Config(m.into()));
        if self.policies.is_empty() {
            return cfg("at least one policy is required");
        }
        if self.deltas.is_empty() {
            return cfg("at least one delta is required");
        }
        for (i, d) in self.deltas.iter().enumerate() {
            if !(*d > 0.0 && *d < 1.0) {
                return cfg("deltas must lie in (0, 1)");
            }
            if self.deltas[..i].contains(d) {
                return cfg("deltas must be distinct");
            }
        }
        for (i, p) in self.policies.iter().enumerate() {
            p.validate()?;
            if self.policies[..i].contains(p) {
                return cfg("policies must be distinct");
            }
        }
        if self.n_runs == 0 {
            return cfg("n_runs must be positive");
        }
        if self.horizon_cap < 2 * self.instance.num_arms() as u64 {
            return cfg("horizon_cap must be at least twice the number of arms");
        }
        self.threshold.validate()?;
        Ok(())
    }
}

/// One run to stopping, as written to the run-record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub delta: f64,
    pub run_index: u64,
    pub tau: u64,
    pub recommended: usize,
    pub correct: bool,
    pub te_rounds: u64,
    pub wall_ns_per_step: u64,
    pub truncated: bool,
}

/// Runs one replicate.
pub fn run_once(
    config: &ExperimentConfig,
    policy: PolicyKind,
    delta: f64,
    run_index: u64,
) -> Result<RunRecord> {
    let spec = RunSpec {
        instance: &config.instance,
        policy,
        threshold: config.threshold,
        delta,
        horizon_cap: config.horizon_cap,
    };
    let (mut env, mut rng) = streams(run_seed(
        config.master_seed,
        policy.stream_id(),
        delta,
        run_index,
    ));
    let start = config.timing.then(Instant::now);
    let out = run_to_stop(&spec, &mut env, &mut rng).map_err(|source| LabError::Run {
        policy: policy.to_string(),
        delta,
        run_index,
        master_seed: config.master_seed,
        source,
    })?;
    let wall_ns_per_step = start
        .map(|s| (s.elapsed().as_nanos() / u128::from(out.tau.max(1))) as u64)
        .unwrap_or(0);
    Ok(RunRecord {
        policy: policy.to_string(),
        delta,
        run_index,
        tau: out.tau,
        recommended: out.recommended,
        correct: out.correct,
        te_rounds: out.te_rounds,
        wall_ns_per_step,
        truncated: out.truncated,
    })
}

/// All `policy x delta x run_index` replicates, ordered by policy (config
/// order), delta (config order) and run index.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let tasks: Vec<(usize, usize, u64)> = (0..config.policies.len())
        .flat_map(|p| {
            (0..config.deltas.len()).flat_map(move |d| (0..config.n_runs).map(move |r| (p, d, r)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Runtime(format!("worker pool: {e}")))?;
    let mut keyed: Vec<((usize, usize, u64), RunRecord)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, d, r)| {
                run_once(config, config.policies[p], config.deltas[d], r)
                    .map(|rec| ((p, d, r), rec))
            })
            .collect::<Result<_>>()
    })?;
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, rec)| rec).collect())
}

/// Summary of one `(policy, delta)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub policy: String,
    pub delta: f64,
    /// All runs, truncated ones included.
    pub n: u64,
    /// Mean, standard deviation and standard error of `tau` over the runs
    /// that stopped; NaN when fewer than one (two for the spreads) stopped.
    pub mean_tau: f64,
    pub std_tau: f64,
    pub stderr: f64,
    /// Share of runs that did not recommend the best arm; truncated runs
    /// count as errors.
    pub error_rate: f64,
    pub errors: u64,
    pub truncated: u64,
    /// One-sided Welch p-value of `mean_tau(self) < mean_tau(other)` for
    /// every other policy at the same delta; NaN when the test is undefined.
    pub welch: BTreeMap<String, f64>,
}

/// Aggregates records per `(policy, delta)`, in order of first appearance.
pub fn aggregate(records: &[RunRecord]) -> Vec<Aggregate> {
    let mut cells: Vec<((String, u64), Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = (r.policy.clone(), r.delta.to_bits());
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => cells.push((key, vec![r])),
        }
    }
    let taus = |rs: &[&RunRecord]| -> Vec<f64> {
        rs.iter()
            .filter(|r| !r.truncated)
            .map(|r| r.tau as f64)
            .collect()
    };
    cells
        .iter()
        .map(|((policy, dbits), rs)| {
            let t = taus(rs);
            let (mean_tau, std_tau) = mean_std(&t).unwrap_or((f64::NAN, f64::NAN));
            let (std_tau, stderr) = if t.len() >= 2 {
                (std_tau, std_tau / (t.len() as f64).sqrt())
            } else {
                (f64::NAN, f64::NAN)
            };
            let errors = rs.iter().filter(|r| !r.correct).count() as u64;
            let welch = cells
                .iter()
                .filter(|((p, d), _)| d == dbits && p != policy)
                .map(|((p, _), other)| {
                    let p_value = welch_one_sided(&t, &taus(other), WELCH_ALPHA)
                        .map(|w| w.p_value)
                        .unwrap_or(f64::NAN);
                    (p.clone(), p_value)
                })
                .collect();
            Aggregate {
                policy: policy.clone(),
                delta: f64::from_bits(*dbits),
                n: rs.len() as u64,
                mean_tau,
                std_tau,
                stderr,
                error_rate: errors as f64 / rs.len() as f64,
                errors,
                truncated: rs.iter().filter(|r| r.truncated).count() as u64,
                welch,
            }
        })
        .collect()
}

/// Binary relative entropy `kl(p, q)`.
fn kl_bernoulli(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(LabError::Config("delta must lie in (0, 1)".into()))
    }
}

/// Sample-complexity lower bound `T* kl(delta, 1 - delta)`.
pub fn lower_bound(inst: &Instance, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(t_star(inst, DEFAULT_TOL)? * kl_bernoulli(delta, 1.0 - delta))
}

/// The looser `T* log(1 / (2.4 delta))` form of the bound.
pub fn lower_bound_relaxed(inst: &Instance, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(t_star(inst, DEFAULT_TOL)? * (1.0 / (2.4 * delta)).ln())
}

/// Largest round scanned by [`practical_lower_bound`].
const PLB_SCAN_LIMIT: u64 = 100_000_000;

/// First round `t` with `t / T* >= beta(t, delta)`: when an oracle that
/// plays the optimal allocation could stop.
pub fn practical_lower_bound(inst: &Instance, delta: f64, kind: &ThresholdKind) -> Result<u64> {
    check_delta(delta)?;
    kind.validate()?;
    let ts = t_star(inst, DEFAULT_TOL)?;
    (1..=PLB_SCAN_LIMIT)
        .find(|&t| t as f64 / ts >= kind.value(t, delta))
        .ok_or_else(|| LabError::Runtime("practical lower bound beyond the scan limit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use bai_core::ModelKind;

    fn two_gauss() -> Instance {
        Instance::new(ModelKind::Gaussian { sigma2: 1.0 }, vec![10.0, 0.0]).unwrap()
    }

    fn bern5() -> Instance {
        Instance::new(ModelKind::Bernoulli, vec![0.3, 0.21, 0.2, 0.19, 0.18]).unwrap()
    }

    #[test]
    fn huge_gap_stops_fast() {
        let cfg = ExperimentConfig::new(two_gauss(), vec![PolicyKind::RoundRobin], vec![0.2]);
        let r = run_once(&cfg, PolicyKind::RoundRobin, 0.2, 0).unwrap();
        assert!(r.correct && !r.truncated && r.tau < 40, "{r:?}");
        assert_eq!(r, run_once(&cfg, PolicyKind::RoundRobin, 0.2, 0).unwrap());
    }

    #[test]
    fn cap_flags_truncation() {
        let mut cfg = ExperimentConfig::new(bern5(), vec![PolicyKind::BestChallengerTe], vec![0.1]);
        cfg.horizon_cap = 10;
        let r = run_once(&cfg, PolicyKind::BestChallengerTe, 0.1, 0).unwrap();
        assert!(r.truncated && !r.correct && r.tau == 10);
        let agg = aggregate(&[r]);
        assert_eq!(agg[0].truncated, 1);
        assert!(agg[0].mean_tau.is_nan());
        assert_eq!(agg[0].error_rate, 1.0);
    }

    #[test]
    fn singleton_experiment_equals_run_once() {
        let mut cfg = ExperimentConfig::new(bern5(), vec![PolicyKind::BestChallengerTe], vec![0.1]);
        cfg.n_runs = 1;
        let all = run_experiment(&cfg, 2).unwrap();
        assert_eq!(
            all,
            vec![run_once(&cfg, PolicyKind::BestChallengerTe, 0.1, 0).unwrap()]
        );
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ExperimentConfig::new(bern5(), vec![PolicyKind::RoundRobin], vec![0.1, 0.1]);
        assert!(matches!(cfg.validate(), Err(LabError::Config(_))));
        cfg.deltas = vec![1.0];
        assert!(cfg.validate().is_err());
        cfg.deltas = vec![0.1];
        cfg.horizon_cap = 9;
        assert!(cfg.validate().is_err());
        cfg.horizon_cap = 10;
        cfg.n_runs = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn aggregates() {
        let rec = |policy: &str, tau: u64, correct: bool| RunRecord {
            policy: policy.into(),
            delta: 0.1,
            run_index: 0,
            tau,
            recommended: 0,
            correct,
            te_rounds: 0,
            wall_ns_per_step: 0,
            truncated: false,
        };
        let rs = vec![
            rec("a", 10, true),
            rec("a", 12, true),
            rec("a", 14, false),
            rec("b", 30, true),
            rec("b", 34, true),
        ];
        let agg = aggregate(&rs);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].mean_tau, 12.0);
        assert_eq!(agg[0].std_tau, 2.0);
        assert!((agg[0].error_rate - 1.0 / 3.0).abs() < 1e-15);
        assert!(agg[0].welch["b"] < 0.05);
        assert!(agg[1].welch["a"] > 0.95);
    }

    #[test]
    fn lower_bounds_on_reference_instances() {
        let b5 = bern5();
        assert!((lower_bound(&b5, 0.1).unwrap() - 574.0).abs() < 1.0);
        assert!(lower_bound_relaxed(&b5, 0.1).unwrap() < lower_bound(&b5, 0.1).unwrap() + 200.0);
        let h = ThresholdKind::HeuristicLogLog;
        assert!((practical_lower_bound(&b5, 0.1, &h).unwrap() as i64 - 1442).abs() <= 1);
        let g4 = Instance::new(
            ModelKind::Gaussian { sigma2: 1.0 },
            vec![1.0, 0.85, 0.8, 0.7],
        )
        .unwrap();
        assert!((practical_lower_bound(&g4, 0.01, &h).unwrap() as i64 - 3062).abs() <= 1);
        assert!(lower_bound(&b5, 0.0).is_err());
    }
}
