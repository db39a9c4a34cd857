//! Transportation costs and characteristic times.
//!
//! For a leader arm `1` and a challenger `i`, the transportation cost of an
//! allocation `w` is
//!
//! ```text
//! f_i(w) = w_1 d(mu_1, m) + w_i d(mu_i, m),   m = (w_1 mu_1 + w_i mu_i) / (w_1 + w_i)
//! ```
//!
//! and `g(w) = min_{i != 1} f_i(w)` is concave on the simplex. The optimal
//! characteristic time is `T* = 1 / sup_w g(w)`. Two restricted versions are
//! solved here as well: `T^beta` fixes the leader's share to `beta`, and the
//! balanced time fixes `w_2 / (w_1 + w_2)` to the point `gamma` where the two
//! divergences of the best pair are equal.
//!
//! All solvers reduce to monotone one-dimensional problems and use bisection.
//! Working through the per-arm function `k_i(x) = f_i((1, x)) `:
//!
//! - `k_i` increases from `0` to `d(mu_1, mu_i)` and `l_i` is its inverse;
//! - the optimal allocation is `w_i ∝ l_i(y*)` (leader `∝ 1`) where `y*`
//!   solves `sum_i d(mu_1, m_i) / d(mu_i, m_i) = 1` at `m_i` the weighted mean
//!   for ratio `l_i(y)`;
//! - the fixed-leader optimum equalizes `k_i(w_i / beta)`;
//! - the balanced allocation sets `y = k_2(gamma / (1 - gamma))` and
//!   `w_i ∝ l_i(y)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{mix, Instance, ModelKind};
use crate::{Error, Result, Weights, MAX_BISECTIONS};

/// Instances whose two best means are closer than this are rejected by
/// [`CharacteristicTimes::compute`].
pub const MIN_GAP: f64 = 1e-9;


/// `w_a d(mu_a, m) + w_b d(mu_b, m)` at the `(w_a, w_b)`-weighted mean `m`;
/// zero when both weights vanish.
#[inline]
pub fn transport_cost(model: &ModelKind, mu_a: f64, mu_b: f64, w_a: f64, w_b: f64) -> f64 {
    if !(w_a + w_b > 0.0) {
        return 0.0;
    }
    let m = mix(mu_a, mu_b, w_a, w_b);
    let mut cost = 0.0;
    if w_a > 0.0 {
        cost += w_a * model.divergence(mu_a, m);
    }
    if w_b > 0.0 {
        cost += w_b * model.divergence(mu_b, m);
    }
    cost
}

fn check_weights(w: &Weights, k: usize) -> Result<()> {
    if w.len() != k {
        Err(Error::InvalidWeights(
            "length differs from the number of arms",
        ))
    } else {
        Ok(())
    }
}

/// `f_i(w)` with `best` as the leader.
pub fn f_value(i: usize, w: &Weights, inst: &Instance, best: usize) -> Result<f64> {
    inst.check_arm(i)?;
    inst.check_arm(best)?;
    check_weights(w, inst.num_arms())?;
    if i == best {
        return Err(Error::BestArm(i));
    }
    let mu = inst.means();
    Ok(transport_cost(inst.model(), mu[best], mu[i], w[best], w[i]))
}

/// `g(w) = min_{i != best} f_i(w)`.
pub fn g_value(w: &Weights, inst: &Instance) -> Result<f64> {
    check_weights(w, inst.num_arms())?;
    Ok(min_transport_at(
        inst.model(),
        inst.means(),
        inst.best(),
        w.as_slice(),
    ))
}

/// `min_{i != leader} f_i(w)` for arbitrary means in the closure of the
/// domain, e.g. empirical means.
pub fn min_transport_at(model: &ModelKind, means: &[f64], leader: usize, w: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..means.len() {
        if i != leader {
            let c = transport_cost(model, means[leader], means[i], w[leader], w[i]);
            if c < min {
                min = c;
            }
        }
    }
    min
}

/// Subgradient of `g` at an interior allocation, with uniform weights over
/// the challenger set `J = {i : f_i <= min f + tie_tol}`.
pub fn subgradient(w: &Weights, inst: &Instance, tie_tol: f64) -> Result<Vec<f64>> {
    check_weights(w, inst.num_arms())?;
    if !w.is_interior() {
        return Err(Error::InvalidWeights(
            "subgradient needs an interior allocation",
        ));
    }
    if !(tie_tol >= 0.0) {
        return Err(Error::InvalidArgument("tie tolerance must be non-negative"));
    }
    Ok(subgradient_at(
        inst.model(),
        inst.means(),
        inst.best(),
        w.as_slice(),
        tie_tol,
    ))
}

/// [`subgradient`] without checks, for empirical means.
pub fn subgradient_at(
    model: &ModelKind,
    means: &[f64],
    leader: usize,
    w: &[f64],
    tie_tol: f64,
) -> Vec<f64> {
    let k = means.len();
    let costs: Vec<f64> = (0..k)
        .map(|i| {
            if i == leader {
                f64::INFINITY
            } else {
                transport_cost(model, means[leader], means[i], w[leader], w[i])
            }
        })
        .collect();
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let challengers: Vec<usize> = (0..k)
        .filter(|&i| i != leader && costs[i] <= min + tie_tol)
        .collect();
    let share = 1.0 / challengers.len() as f64;
    let mut v = vec![0.0; k];
    for &j in &challengers {
        let m = mix(means[leader], means[j], w[leader], w[j]);
        v[leader] += share * model.divergence(means[leader], m);
        v[j] = share * model.divergence(means[j], m);
    }
    v
}

#[inline]
fn k_raw(model: &ModelKind, mu_best: f64, mu_i: f64, x: f64) -> f64 {
    let m = mix(mu_best, mu_i, 1.0, x);
    model.divergence(mu_best, m) + x * model.divergence(mu_i, m)
}

#[inline]
fn h_raw(model: &ModelKind, mu_best: f64, mu_i: f64, z: f64) -> f64 {
    let m = mix(mu_best, mu_i, 1.0 - z, z);
    let mut h = 0.0;
    if z < 1.0 {
        h += (1.0 - z) * model.divergence(mu_best, m);
    }
    if z > 0.0 {
        h += z * model.divergence(mu_i, m);
    }
    h
}

/// `k_i(x) = d(mu_best, m) + x d(mu_i, m)` with `m = (mu_best + x mu_i) / (1 + x)`.
pub fn k_value(i: usize, x: f64, inst: &Instance) -> Result<f64> {
    inst.check_suboptimal(i)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(
            "k needs a finite non-negative ratio",
        ));
    }
    let mu = inst.means();
    Ok(k_raw(inst.model(), mu[inst.best()], mu[i], x))
}

/// `h_i(z) = (1 - z) d(mu_best, m) + z d(mu_i, m)` with `m = (1 - z) mu_best + z mu_i`.
pub fn h_value(i: usize, z: f64, inst: &Instance) -> Result<f64> {
    inst.check_suboptimal(i)?;
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidArgument("h needs z in [0, 1]"));
    }
    let mu = inst.means();
    Ok(h_raw(inst.model(), mu[inst.best()], mu[i], z))
}

/// Inverse of `k_i` by bracket growth and a bracketed secant search.
fn l_raw(model: &ModelKind, mu_best: f64, mu_i: f64, y: f64, tol: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    // k_i stays below d(mu_best, mu_i) for the canonical models; Pareto arms
    // may exceed it, so the range is only enforced through the bracket
    let k = |x: f64| k_raw(model, mu_best, mu_i, x);
    let mut hi = 1.0;
    let mut lo = 0.0;
    while k(hi) <= y {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidArgument("value outside the range of k"));
        }
    }
    let (x, width) = solve_bracketed(|x| Ok(k(x)), lo, hi, y)?;
    // k flattens towards its supremum, so the residual in k carries rounding
    // noise; convergence is judged on the bracket instead
    if width > tol * x.max(1.0) {
        return Err(Error::NoConvergence {
            what: "inverse of k",
            iterations: MAX_BISECTIONS,
            residual: width,
        });
    }
    Ok(x)
}

/// `l_i(y)`, the inverse of `k_i` on `[0, d(mu_best, mu_i))`.
pub fn l_inverse(i: usize, y: f64, inst: &Instance, tol: f64) -> Result<f64> {
    inst.check_suboptimal(i)?;
    check_tol(tol)?;
    if !(y >= 0.0) {
        return Err(Error::InvalidArgument("l needs a non-negative value"));
    }
    let mu = inst.means();
    l_raw(inst.model(), mu[inst.best()], mu[i], y, tol)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("tolerance must be positive"))
    }
}

/// `sum_{i != leader} d(mu_leader, m_i) / d(mu_i, m_i)` where `m_i` is the
/// weighted mean at ratio `l_i(y)`. Increasing in `y`, zero at `y = 0`.
fn ratio_sum_at(model: &ModelKind, means: &[f64], leader: usize, y: f64, tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for (i, &mu_i) in means.iter().enumerate() {
        if i == leader {
            continue;
        }
        let x = l_raw(model, means[leader], mu_i, y, tol)?;
        let m = mix(means[leader], mu_i, 1.0, x);
        total += model.divergence(means[leader], m) / model.divergence(mu_i, m);
    }
    Ok(total)
}

/// The increasing function whose unit crossing defines the optimal
/// allocation: `sum_{i != best} d(mu_best, m_i) / d(mu_i, m_i)` at ratios `l_i(y)`.
pub fn divergence_ratio_sum(inst: &Instance, y: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !(y >= 0.0) {
        return Err(Error::InvalidArgument(
            "ratio sum needs a non-negative value",
        ));
    }
    ratio_sum_at(inst.model(), inst.means(), inst.best(), y, tol)
}

/// Second-best arm for a strict leader: lowest index among the maximal others.
fn runner_up(means: &[f64], leader: usize) -> Result<usize> {
    let mut second = if leader == 0 { 1 } else { 0 };
    for (i, &mu) in means.iter().enumerate() {
        if i != leader && mu > means[second] {
            second = i;
        }
    }
    if !(means[leader] > means[second]) {
        return Err(Error::TiedBest(leader.min(second), leader.max(second)));
    }
    Ok(second)
}

/// Root of `phi(x) = target` for an increasing `phi` bracketed by
/// `[lo, hi]`, by the Illinois variant of regula falsi (bisection steps when
/// the secant leaves the bracket or meets a non-finite value). Returns the
/// root and the final bracket width.
fn solve_bracketed<F>(mut phi: F, mut lo: f64, mut hi: f64, target: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = phi(lo)? - target;
    let mut fhi = phi(hi)? - target;
    if flo >= 0.0 {
        return Ok((lo, 0.0));
    }
    if fhi <= 0.0 {
        return Ok((hi, 0.0));
    }
    let mut side = 0i8;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = phi(x)? - target;
        if fx == 0.0 {
            return Ok((x, 0.0));
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side < 0 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side > 0 {
                flo *= 0.5;
            }
            side = 1;
        }
        if !fhi.is_finite() || !flo.is_finite() {
            side = 0;
            let mid = 0.5 * (lo + hi);
            if phi(mid)? < target {
                lo = mid;
                flo = phi(lo)? - target;
            } else {
                hi = mid;
                fhi = phi(hi)? - target;
            }
        }
    }
    let x = if -flo < fhi { lo } else { hi };
    Ok((x, hi - lo))
}

fn bisect_increasing<F>(phi: F, lo: f64, hi: f64, target: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    solve_bracketed(phi, lo, hi, target).map(|(x, _)| x)
}

/// Optimal allocation and the crossing point `y*` for arbitrary means with a
/// strict leader. Means may sit on the closure of the domain.
///
/// The search runs over the runner-up's ratio `x_2 = w_2 / w_leader`: every
/// other ratio follows from `y = k_2(x_2)` and the divergence-ratio sum is
/// increasing in `x_2`. Unlike a search over `y`, this needs no upper bound
/// on the range of `k`, which matters for Pareto arms whose `k` can overshoot
/// `d(mu_leader, mu_i)`.
pub fn solve_w_star_at(
    model: &ModelKind,
    means: &[f64],
    leader: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    check_tol(tol)?;
    let second = runner_up(means, leader)?;
    let ratios = |x2: f64| -> Result<(Vec<f64>, f64)> {
        let y = k_raw(model, means[leader], means[second], x2);
        let mut x = vec![1.0; means.len()];
        for (i, xi) in x.iter_mut().enumerate() {
            if i == second || (i != leader && means[i] == means[second]) {
                *xi = x2;
            } else if i != leader {
                *xi = l_raw(model, means[leader], means[i], y, tol)?;
            }
        }
        Ok((x, y))
    };
    let ratio_sum = |x2: f64| -> Result<f64> {
        let (x, _) = ratios(x2)?;
        let mut total = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if i != leader {
                let m = mix(means[leader], means[i], 1.0, xi);
                total += model.divergence(means[leader], m) / model.divergence(means[i], m);
            }
        }
        Ok(total)
    };
    let mut hi = 1.0;
    let mut grown = 0;
    while ratio_sum(hi)? < 1.0 {
        hi *= 2.0;
        grown += 1;
        if grown > 1100 {
            return Err(Error::NoConvergence {
                what: "optimal allocation bracket",
                iterations: grown,
                residual: 1.0 - ratio_sum(hi * 0.5)?,
            });
        }
    }
    let x2 = bisect_increasing(ratio_sum, 0.0, hi, 1.0)?;
    let residual = (ratio_sum(x2)? - 1.0).abs();
    if residual > tol {
        return Err(Error::NoConvergence {
            what: "optimal allocation",
            iterations: MAX_BISECTIONS,
            residual,
        });
    }
    let (x, y_star) = ratios(x2)?;
    let total: f64 = x.iter().sum();
    Ok((x.into_iter().map(|v| v / total).collect(), y_star))
}

/// Optimal allocation `w*` and the crossing point `y*`.
pub fn solve_w_star(inst: &Instance, tol: f64) -> Result<(Weights, f64)> {
    let (w, y) = solve_w_star_at(inst.model(), inst.means(), inst.best(), tol)?;
    Ok((Weights::new(w)?, y))
}

/// `T* = 1 / g(w*)`.
pub fn t_star(inst: &Instance, tol: f64) -> Result<f64> {
    let (w, _) = solve_w_star(inst, tol)?;
    Ok(1.0 / g_value(&w, inst)?)
}

/// Maximizer of `g` over allocations giving the best arm share `beta`, and
/// the corresponding time `T^beta`.
pub fn beta_allocation(inst: &Instance, beta: f64, tol: f64) -> Result<(Weights, f64)> {
    check_tol(tol)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument("beta must lie in (0, 1)"));
    }
    let (model, mu, best) = (inst.model(), inst.means(), inst.best());
    let second = inst.second_best();
    let target = (1.0 - beta) / beta;
    // searched over the runner-up ratio, as in `solve_w_star_at`: the sum
    // is at least x_2, so [0, target] brackets the root and the search never
    // evaluates l next to the flat top of k
    let ratios = |x2: f64| -> Result<(Vec<f64>, f64)> {
        let c = k_raw(model, mu[best], mu[second], x2);
        let mut x = vec![1.0; mu.len()];
        for (i, xi) in x.iter_mut().enumerate() {
            if i == second || (i != best && mu[i] == mu[second]) {
                *xi = x2;
            } else if i != best {
                *xi = l_raw(model, mu[best], mu[i], c, tol)?;
            }
        }
        Ok((x, c))
    };
    let ratio_sum = |x2: f64| -> Result<f64> {
        let (x, _) = ratios(x2)?;
        Ok(x.iter().enumerate().filter(|&(i, _)| i != best).map(|(_, v)| v).sum())
    };
    let x2 = bisect_increasing(ratio_sum, 0.0, target, target)?;
    let residual = (ratio_sum(x2)? - target).abs();
    if residual > tol * target.max(1.0) {
        return Err(Error::NoConvergence {
            what: "fixed-leader allocation",
            iterations: MAX_BISECTIONS,
            residual,
        });
    }
    let (x, c) = ratios(x2)?;
    let w: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == best { beta } else { beta * v })
        .collect();
    Ok((Weights::new(w)?, 1.0 / (beta * c)))
}

/// `T^beta`: the inverse of the best value of `g` with the best arm's share
/// fixed to `beta`.
pub fn t_beta(inst: &Instance, beta: f64, tol: f64) -> Result<f64> {
    beta_allocation(inst, beta, tol).map(|(_, t)| t)
}

/// Maximizer `z_i*` of `h_i`: the point where `d(mu_best, m) = d(mu_i, m)`.
pub fn balance_point(i: usize, inst: &Instance, tol: f64) -> Result<f64> {
    inst.check_suboptimal(i)?;
    check_tol(tol)?;
    let (model, mu1, mu_i) = (inst.model(), inst.means()[inst.best()], inst.means()[i]);
    let gap = |z: f64| {
        let m = mix(mu1, mu_i, 1.0 - z, z);
        Ok(model.divergence(mu1, m) - model.divergence(mu_i, m))
    };
    let z = bisect_increasing(gap, 0.0, 1.0, 0.0)?;
    let m = mix(mu1, mu_i, 1.0 - z, z);
    let residual = gap(z)?.abs();
    if residual > tol * model.divergence(mu1, m).max(1.0) {
        return Err(Error::NoConvergence {
            what: "divergence balance",
            iterations: MAX_BISECTIONS,
            residual,
        });
    }
    Ok(z)
}

/// Balance point `gamma` of the best and second-best arms.
pub fn solve_gamma(inst: &Instance, tol: f64) -> Result<f64> {
    balance_point(inst.second_best(), inst, tol)
}

/// The allocation the best-challenger rule settles on and its time.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedAllocation {
    pub t_lower: f64,
    pub weights: Weights,
    pub gamma: f64,
    /// Common value of `k_i(w_i / w_best)` over suboptimal arms.
    pub y_lower: f64,
}

/// Balanced allocation: `w_2 / (w_1 + w_2) = gamma` and every other
/// suboptimal arm matched to the same transportation level.
pub fn balanced_allocation(inst: &Instance, tol: f64) -> Result<BalancedAllocation> {
    let gamma = solve_gamma(inst, tol)?;
    let (model, mu, best) = (inst.model(), inst.means(), inst.best());
    let second = inst.second_best();
    let x2 = gamma / (1.0 - gamma);
    let y = k_raw(model, mu[best], mu[second], x2);
    let mut x = vec![1.0; mu.len()];
    for (i, xi) in x.iter_mut().enumerate() {
        if i == second || (i != best && mu[i] == mu[second]) {
            *xi = x2;
        } else if i != best {
            *xi = l_raw(model, mu[best], mu[i], y, tol)?;
        }
    }
    let weights = Weights::new(x)?;
    let t_lower = 1.0 / g_value(&weights, inst)?;
    Ok(BalancedAllocation {
        t_lower,
        weights,
        gamma,
        y_lower: y,
    })
}

/// Balanced characteristic time and its maximizing allocation.
pub fn t_lower(inst: &Instance, tol: f64) -> Result<(f64, Weights)> {
    balanced_allocation(inst, tol).map(|b| (b.t_lower, b.weights))
}

/// Closed form of the balanced time for Gaussian arms:
/// `sum_i 4 sigma2 / (2 gap_i^2 - gap_2^2)` with the best arm's gap set to
/// the second-best gap.
pub fn gaussian_t_lower_closed(inst: &Instance) -> Result<f64> {
    let ModelKind::Gaussian { sigma2 } = *inst.model() else {
        return Err(Error::InvalidArgument(
            "closed form only holds for gaussian arms",
        ));
    };
    let mu = inst.means();
    let top = mu[inst.best()];
    let gap2 = top - mu[inst.second_best()];
    Ok(mu
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let gap = if i == inst.best() { gap2 } else { top - m };
            4.0 * sigma2 / (gap * gap + (gap * gap - gap2 * gap2))
        })
        .sum())
}

/// Grid oracle for `T*`: `1 / max g` over the simplex lattice with step
/// `1 / resolution`. Never below the true `T*`.
pub fn brute_force_t_star(inst: &Instance, resolution: usize) -> Result<f64> {
    let k = inst.num_arms();
    if k > 4 {
        return Err(Error::InvalidArgument(
            "grid oracle supports at most four arms",
        ));
    }
    if resolution < 50 {
        return Err(Error::InvalidArgument(
            "grid resolution must be at least 50",
        ));
    }
    let mut parts = vec![0usize; k];
    let mut w = vec![0.0; k];
    let mut best = 0.0f64;
    lattice(&mut parts, 0, resolution, &mut |p| {
        for (wi, &pi) in w.iter_mut().zip(p) {
            *wi = pi as f64 / resolution as f64;
        }
        let g = min_transport_at(inst.model(), inst.means(), inst.best(), &w);
        if g > best {
            best = g;
        }
    });
    if best > 0.0 {
        Ok(1.0 / best)
    } else {
        Err(Error::InvalidArgument(
            "grid too coarse: every lattice point has g = 0",
        ))
    }
}

fn lattice(parts: &mut [usize], idx: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if idx == parts.len() - 1 {
        parts[idx] = left;
        visit(parts);
        return;
    }
    for n in 0..=left {
        parts[idx] = n;
        lattice(parts, idx + 1, left - n, visit);
    }
}

/// Characteristic quantities of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicTimes {
    pub t_star: f64,
    pub w_star: Weights,
    /// `T^beta` at `beta = 1/2`.
    pub t_beta: f64,
    pub t_lower: f64,
    pub gamma: f64,
    pub w_lower: Weights,
    pub y_star: f64,
    pub y_lower: f64,
}

impl CharacteristicTimes {
    pub fn compute(inst: &Instance, tol: f64) -> Result<Self> {
        let gap = inst.gap();
        if gap < MIN_GAP {
            return Err(Error::DegenerateGap(gap));
        }
        let (w_star, y_star) = solve_w_star(inst, tol)?;
        let t_star = 1.0 / g_value(&w_star, inst)?;
        let t_beta = t_beta(inst, 0.5, tol)?;
        let balanced = balanced_allocation(inst, tol)?;
        Ok(Self {
            t_star,
            w_star,
            t_beta,
            t_lower: balanced.t_lower,
            gamma: balanced.gamma,
            w_lower: balanced.weights,
            y_star,
            y_lower: balanced.y_lower,
        })
    }
}
