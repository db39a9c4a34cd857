//! Self-check suite behind `bai validate`.
//!
//! Each check exercises a structural property of the solvers or the
//! harness on seeded random inputs and reports pass/fail with a short
//! detail line.

use std::time::{Duration, Instant};

use bai_core::characteristic::{
    balance_point, brute_force_t_star, divergence_ratio_sum, f_value, g_value, h_value, k_value,
    l_inverse, subgradient, t_star, transport_cost,
};
use bai_core::trace::{bcte_trace, count_path};
use bai_core::{CharacteristicTimes, Instance, ModelKind, PolicyKind, Weights, DEFAULT_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harness::{run_experiment, ExperimentConfig};
use crate::io::records_ndjson;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

/// Models whose transportation cost mixes on the sufficient-statistic
/// scale; the concavity-based properties are stated for these.
const CANONICAL: [ModelKind; 5] = [
    ModelKind::Bernoulli,
    ModelKind::Gaussian { sigma2: 1.0 },
    ModelKind::Gaussian { sigma2: 0.3 },
    ModelKind::Poisson,
    ModelKind::Exponential,
];

fn random_instance<R: Rng>(rng: &mut R, model: ModelKind, kmin: usize, kmax: usize) -> Instance {
    let (lo, hi) = match model {
        ModelKind::Bernoulli => (0.05, 0.95),
        ModelKind::Gaussian { .. } => (-2.0, 2.0),
        ModelKind::Pareto { scale } => (1.2 * scale, 6.0 * scale),
        _ => (0.2, 4.0),
    };
    loop {
        let k = rng.random_range(kmin..=kmax);
        let means = (0..k).map(|_| rng.random_range(lo..hi)).collect();
        if let Ok(inst) = Instance::new(model, means) {
            if inst.gap() > 0.01 * (hi - lo) {
                return inst;
            }
        }
    }
}

fn random_weights<R: Rng>(rng: &mut R, k: usize) -> Weights {
    Weights::new((0..k).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap()
}

fn canonical_instance<R: Rng>(rng: &mut R, kmax: usize) -> Instance {
    let model = CANONICAL[rng.random_range(0..CANONICAL.len())];
    random_instance(rng, model, 2, kmax)
}

type Check = fn(&mut ChaCha8Rng, usize) -> Result<String, String>;

fn subgradient_inequality(rng: &mut ChaCha8Rng, _: usize) -> Result<String, String> {
    let pairs = 1000;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let inst = canonical_instance(rng, 6);
        let k = inst.num_arms();
        let (w, w2) = (random_weights(rng, k), random_weights(rng, k));
        let v = subgradient(&w, &inst, 0.0).map_err(|e| e.to_string())?;
        let g2 = g_value(&w2, &inst).map_err(|e| e.to_string())?;
        let lin: f64 = v.iter().zip(w2.as_slice()).map(|(a, b)| a * b).sum();
        let excess = (g2 - lin) / lin.abs().max(1.0);
        worst = worst.max(excess);
        if excess > 1e-12 {
            return Err(format!(
                "g(w') exceeds <v, w'> by {excess:e} on {:?}",
                inst.means()
            ));
        }
    }
    Ok(format!("{pairs} pairs, max relative excess {worst:.1e}"))
}

fn k_l_round_trip(rng: &mut ChaCha8Rng, _: usize) -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut n = 0;
    for _ in 0..300 {
        let inst = canonical_instance(rng, 6);
        let best = inst.best();
        for i in (0..inst.num_arms()).filter(|&i| i != best) {
            let top = inst.model().divergence(inst.means()[best], inst.means()[i]);
            let y = rng.random_range(0.0..0.999) * top;
            let x = l_inverse(i, y, &inst, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let back = k_value(i, x, &inst).map_err(|e| e.to_string())?;
            let err = (back - y).abs() / y.max(1.0);
            worst = worst.max(err);
            n += 1;
            if err > 1e-9 {
                return Err(format!("k(l(y)) - y = {err:e} at y = {y}"));
            }
        }
    }
    Ok(format!("{n} round trips, max error {worst:.1e}"))
}

fn h_concavity_and_balance(rng: &mut ChaCha8Rng, _: usize) -> Result<String, String> {
    let grid = 200;
    let mut n = 0;
    for _ in 0..100 {
        let inst = canonical_instance(rng, 5);
        let best = inst.best();
        let mu = inst.means();
        for i in (0..inst.num_arms()).filter(|&i| i != best) {
            let h: Vec<f64> = (0..=grid)
                .map(|j| h_value(i, j as f64 / grid as f64, &inst))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let scale = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if h[0].abs() > 1e-12 * scale || h[grid].abs() > 1e-12 * scale {
                return Err(format!(
                    "h does not vanish at the ends: {} {}",
                    h[0], h[grid]
                ));
            }
            for j in 1..grid {
                let second = h[j + 1] - 2.0 * h[j] + h[j - 1];
                if second > 1e-12 {
                    return Err(format!("h not concave on {mu:?}, arm {i}: {second:e}"));
                }
            }
            let z = balance_point(i, &inst, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let hz = h_value(i, z, &inst).map_err(|e| e.to_string())?;
            let grid_max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hz < grid_max - 1e-12 {
                return Err(format!("h(z*) = {hz} below grid maximum {grid_max}"));
            }
            let m = mu[best] + z * (mu[i] - mu[best]);
            let d = inst.model();
            let gap = (d.divergence(mu[best], m) - d.divergence(mu[i], m)).abs();
            if gap > 1e-9 {
                return Err(format!("divergences at z* differ by {gap:e}"));
            }
            n += 1;
        }
    }
    Ok(format!("{n} arms, {grid}-point grids"))
}

fn ratio_sum_bounds(rng: &mut ChaCha8Rng, _: usize) -> Result<String, String> {
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..200 {
        let inst = canonical_instance(rng, 8);
        let ct = CharacteristicTimes::compute(&inst, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let f = divergence_ratio_sum(&inst, ct.y_lower, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let k = inst.num_arms() as f64;
        if !(1.0 - 1e-9..=k - 1.0 + 1e-9).contains(&f) {
            return Err(format!(
                "F = {f} outside [1, {}] on {:?}",
                k - 1.0,
                inst.means()
            ));
        }
        if !(ct.t_star <= ct.t_lower * (1.0 + 1e-9) && ct.t_lower <= 2.0 * ct.t_star * (1.0 + 1e-9))
        {
            return Err(format!(
                "balanced time outside [T*, 2T*] on {:?}",
                inst.means()
            ));
        }
        range = (range.0.min(f / (k - 1.0)), range.1.max(f / (k - 1.0)));
    }
    Ok(format!(
        "200 instances, F/(K-1) in [{:.3}, {:.3}]",
        range.0, range.1
    ))
}

fn transport_monotone_on_traces(_: &mut ChaCha8Rng, _: usize) -> Result<String, String> {
    let inst = Instance::new(ModelKind::Bernoulli, vec![0.3, 0.21, 0.2, 0.19, 0.18]).unwrap();
    let (mu, best) = (inst.means(), inst.best());
    let traces = 100;
    let horizon = 2000;
    for seed in 0..traces {
        let tr = bcte_trace(&inst, horizon, seed).map_err(|e| e.to_string())?;
        let mut prev = vec![0.0; mu.len()];
        for (t, n) in count_path(&tr, mu.len()).iter().enumerate() {
            for i in (0..mu.len()).filter(|&i| i != best) {
                let c = transport_cost(inst.model(), mu[best], mu[i], n[best] as f64, n[i] as f64);
                if c < prev[i] - 1e-12 {
                    return Err(format!(
                        "seed {seed}, t {}: t f_{i} fell from {} to {c}",
                        t + 1,
                        prev[i]
                    ));
                }
                prev[i] = c;
            }
        }
    }
    Ok(format!("{traces} traces of {horizon} rounds"))
}

fn finite_difference_gradients(rng: &mut ChaCha8Rng, _: usize) -> Result<String, String> {
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let inst = canonical_instance(rng, 5);
        let w = random_weights(rng, inst.num_arms());
        let best = inst.best();
        let mu = inst.means();
        let d = inst.model();
        for i in (0..inst.num_arms()).filter(|&i| i != best) {
            let m = mu[best] + w[i] / (w[best] + w[i]) * (mu[i] - mu[best]);
            let exact = [
                (best, d.divergence(mu[best], m)),
                (i, d.divergence(mu[i], m)),
            ];
            // error is measured against the larger gradient component: for
            // nearly equal means one component sits at rounding level
            let scale = exact[0].1.max(exact[1].1).max(1e-8);
            for (slot, grad) in exact {
                let h = 1e-6 * w[slot];
                let eval = |shift: f64| -> Result<f64, String> {
                    let mut raw = w.as_slice().to_vec();
                    raw[slot] += shift;
                    let total: f64 = raw.iter().sum();
                    let wt = Weights::new(raw).map_err(|e| e.to_string())?;
                    Ok(f_value(i, &wt, &inst, best).map_err(|e| e.to_string())? * total)
                };
                let fd = (eval(h)? - eval(-h)?) / (2.0 * h);
                let rel = (fd - grad).abs() / scale;
                worst = worst.max(rel);
                if rel > 1e-4 {
                    return Err(format!("df_{i}/dw_{slot}: {fd} vs {grad}"));
                }
            }
        }
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn grid_oracle(rng: &mut ChaCha8Rng, _: usize) -> Result<String, String> {
    let mut worst = 0.0f64;
    for j in 0..20 {
        let model = CANONICAL[j % CANONICAL.len()];
        let inst = random_instance(rng, model, 3, 3);
        let exact = t_star(&inst, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let grid = brute_force_t_star(&inst, 300).map_err(|e| e.to_string())?;
        let rel = (grid - exact) / exact;
        worst = worst.max(rel);
        if !(rel > -1e-9 && rel < 0.02) {
            return Err(format!(
                "grid {grid} vs solver {exact} on {:?}",
                inst.means()
            ));
        }
    }
    Ok(format!(
        "20 three-arm instances, max gap {:.2}%",
        100.0 * worst
    ))
}

fn replay_determinism(_: &mut ChaCha8Rng, workers: usize) -> Result<String, String> {
    let inst = Instance::new(ModelKind::Bernoulli, vec![0.5, 0.4, 0.35]).unwrap();
    let mut cfg = ExperimentConfig::new(
        inst,
        vec![
            PolicyKind::BestChallengerTe,
            PolicyKind::TrackAndStop,
            PolicyKind::TopTwo { beta: 0.5 },
            PolicyKind::RoundRobin,
        ],
        vec![0.2, 0.05],
    );
    cfg.n_runs = 12;
    cfg.master_seed = 99;
    let mut counts = vec![1, 2, 3, workers.max(1), 7];
    counts.dedup();
    let outputs: Vec<String> = counts
        .iter()
        .map(|&w| {
            run_experiment(&cfg, w)
                .and_then(|r| records_ndjson(&r))
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    if outputs.windows(2).any(|p| p[0] != p[1]) {
        return Err(format!("outputs differ across worker counts {counts:?}"));
    }
    Ok(format!(
        "{} records identical for workers {counts:?}",
        outputs[0].lines().count()
    ))
}

const CHECKS: [(&str, Check); 8] = [
    ("subgradient inequality", subgradient_inequality),
    ("k/l round trips", k_l_round_trip),
    ("h concavity and balance point", h_concavity_and_balance),
    ("ratio sum at the balanced level", ratio_sum_bounds),
    (
        "transport level monotone along traces",
        transport_monotone_on_traces,
    ),
    (
        "finite-difference gradients of f_i",
        finite_difference_gradients,
    ),
    ("grid oracle for T* (K = 3)", grid_oracle),
    (
        "replay determinism across worker counts",
        replay_determinism,
    ),
];

/// Runs every check with a fixed seed.
pub fn run_all(workers: usize) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(j, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0000 + j as u64);
            let start = Instant::now();
            let result = check(&mut rng, workers);
            let (passed, detail) = match result {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                elapsed: start.elapsed(),
            }
        })
        .collect()
}
