//! Steady-state planning for the Leitner queue network.
//!
//! Under the mean-recall approximation each deck is an M/M/1 queue with
//! service rate `mu_k`, arrival rate `lambda_k`, and recall probability
//! `P_k = (mu_k - lambda_k) / (mu_k - lambda_k + theta / k)`. The deck
//! arrival rates must satisfy the flow-balance equations
//!
//! ```text
//! lambda_1 = lambda_ext + (1 - P_1) lambda_1 + (1 - P_2) lambda_2
//! lambda_k = P_{k-1} lambda_{k-1} + (1 - P_{k+1}) lambda_{k+1}   (1 < k < n)
//! lambda_n = P_{n-1} lambda_{n-1}
//! ```
//!
//! which are equivalent to the cut identities
//! `P_k lambda_k - (1 - P_{k+1}) lambda_{k+1} = lambda_ext` and
//! `P_n lambda_n = lambda_ext`. The solver iterates: recall probabilities
//! from the current arrival rates, then arrival rates by back-substitution
//! from the cut identities, with damping.

use crate::optim::{golden_section_max, nelder_mead_min};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const DAMPING: f64 = 0.5;
const FLOW_TOL: f64 = 1e-12;
const FLOW_MAX_ITER: usize = 10_000;
/// Iteration budget for flow solves inside the schedule search, where
/// near-boundary instances are treated as infeasible anyway.
const FLOW_SEARCH_ITER: usize = 2_000;
const RESIDUAL_TOL: f64 = 1e-9;
/// A deck is starved when its arrival rate reaches this fraction of mu.
const STARVE_FRACTION: f64 = 1.0 - 1e-9;
const BUDGET_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("deck {deck} is starved: service rate {mu} does not exceed arrival rate {lambda}")]
    StarvedQueue { deck: usize, mu: f64, lambda: f64 },
    #[error("invalid planning input: {0}")]
    InvalidInput(String),
}

/// A static review policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule {
    pub decks: usize,
    pub lambda_ext: f64,
    pub mu: Vec<f64>,
    pub theta: f64,
    pub budget: f64,
}

impl Schedule {
    pub fn budget_used(&self) -> f64 {
        self.lambda_ext + self.mu.iter().sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.decks == 0 || self.mu.len() != self.decks {
            return Err(PlanError::InvalidInput("deck count / mu length mismatch".into()));
        }
        if self.budget_used() > self.budget + BUDGET_SLACK {
            return Err(PlanError::InvalidInput(format!(
                "budget violated: lambda_ext + sum(mu) = {} > U = {}",
                self.budget_used(),
                self.budget
            )));
        }
        Ok(())
    }
}

/// Steady-state deck arrival rates and recall probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSolution {
    pub lambda: Vec<f64>,
    pub recall: Vec<f64>,
    pub feasible: bool,
    /// Infinity-norm of the flow-balance and cut-identity residuals.
    pub residual: f64,
    pub iterations: usize,
    /// First starved deck (1-indexed) when infeasible, if one was observed.
    pub starved_deck: Option<usize>,
}

impl FlowSolution {
    /// Expected sojourn delays `1 / (mu_k - lambda_k)`.
    pub fn expected_delays(&self, mu: &[f64]) -> Vec<f64> {
        mu.iter().zip(&self.lambda).map(|(m, l)| 1.0 / (m - l)).collect()
    }

    /// Expected queue sizes `lambda_k / (mu_k - lambda_k)`.
    pub fn expected_queues(&self, mu: &[f64]) -> Vec<f64> {
        mu.iter().zip(&self.lambda).map(|(m, l)| l / (m - l)).collect()
    }
}

/// Mean recall probability of deck `k` (1-indexed) under the exponential
/// sojourn-time approximation.
pub fn recall_prob_mean(mu: f64, lambda: f64, theta: f64, deck: usize) -> Result<f64, PlanError> {
    if mu <= lambda {
        return Err(PlanError::StarvedQueue { deck, mu, lambda });
    }
    let margin = mu - lambda;
    Ok(margin / (margin + theta / deck as f64))
}

fn recall_vector(mu: &[f64], lambda: &[f64], theta: f64) -> Option<Vec<f64>> {
    mu.iter()
        .zip(lambda)
        .enumerate()
        .map(|(k, (&m, &l))| {
            if l >= m * STARVE_FRACTION {
                None
            } else {
                Some((m - l) / (m - l + theta / (k + 1) as f64))
            }
        })
        .collect()
}

/// Back-substitute arrival rates from the cut identities given recall
/// probabilities: `lambda_n = lambda_ext / P_n`,
/// `lambda_k = (lambda_ext + (1 - P_{k+1}) lambda_{k+1}) / P_k`.
fn back_substitute(recall: &[f64], lambda_ext: f64) -> Vec<f64> {
    let n = recall.len();
    let mut lambda = vec![0.0; n];
    lambda[n - 1] = lambda_ext / recall[n - 1];
    for k in (0..n - 1).rev() {
        lambda[k] = (lambda_ext + (1.0 - recall[k + 1]) * lambda[k + 1]) / recall[k];
    }
    lambda
}

/// Infinity-norm residual of the balance equations and cut identities.
fn flow_residual(lambda: &[f64], recall: &[f64], lambda_ext: f64) -> f64 {
    let n = lambda.len();
    let mut worst: f64 = (recall[n - 1] * lambda[n - 1] - lambda_ext).abs();
    if n >= 2 {
        worst = worst.max(
            (lambda[0] - (lambda_ext + (1.0 - recall[0]) * lambda[0] + (1.0 - recall[1]) * lambda[1]))
                .abs(),
        );
        for k in 1..n - 1 {
            worst = worst.max(
                (lambda[k] - (recall[k - 1] * lambda[k - 1] + (1.0 - recall[k + 1]) * lambda[k + 1]))
                    .abs(),
            );
        }
        worst = worst.max((lambda[n - 1] - recall[n - 2] * lambda[n - 2]).abs());
        for k in 0..n - 1 {
            worst = worst.max(
                (recall[k] * lambda[k] - (1.0 - recall[k + 1]) * lambda[k + 1] - lambda_ext).abs(),
            );
        }
    } else {
        // n = 1: the deck both reflects failures and emits masteries
        worst = worst.max((lambda[0] - (lambda_ext + (1.0 - recall[0]) * lambda[0])).abs());
    }
    worst
}

fn solve_flow_balance_capped(mu: &[f64], lambda_ext: f64, theta: f64, max_iter: usize) -> FlowSolution {
    let n = mu.len();
    assert!(n >= 1, "at least one deck required");
    assert!(mu.iter().all(|&m| m > 0.0), "service rates must be positive");
    assert!(lambda_ext >= 0.0 && theta > 0.0);

    if lambda_ext == 0.0 {
        let lambda = vec![0.0; n];
        let recall = recall_vector(mu, &lambda, theta).expect("mu > 0");
        return FlowSolution {
            residual: flow_residual(&lambda, &recall, 0.0),
            lambda,
            recall,
            feasible: true,
            iterations: 0,
            starved_deck: None,
        };
    }

    let mut lambda = vec![0.0; n];
    for iter in 0..max_iter {
        let Some(recall) = recall_vector(mu, &lambda, theta) else {
            let starved = lambda
                .iter()
                .zip(mu)
                .position(|(l, m)| *l >= *m * STARVE_FRACTION)
                .map(|k| k + 1);
            return FlowSolution {
                recall: vec![0.0; n],
                lambda,
                feasible: false,
                residual: f64::INFINITY,
                iterations: iter,
                starved_deck: starved,
            };
        };
        let next = back_substitute(&recall, lambda_ext);
        let mut change: f64 = 0.0;
        for (l, nl) in lambda.iter_mut().zip(&next) {
            let damped = DAMPING * nl + (1.0 - DAMPING) * *l;
            change = change.max((damped - *l).abs());
            *l = damped;
        }
        if change < FLOW_TOL {
            let recall = match recall_vector(mu, &lambda, theta) {
                Some(r) => r,
                None => {
                    return FlowSolution {
                        recall: vec![0.0; n],
                        lambda,
                        feasible: false,
                        residual: f64::INFINITY,
                        iterations: iter + 1,
                        starved_deck: None,
                    }
                }
            };
            let residual = flow_residual(&lambda, &recall, lambda_ext);
            let feasible = residual < RESIDUAL_TOL
                && lambda.iter().zip(mu).all(|(l, m)| *l < *m * STARVE_FRACTION);
            return FlowSolution {
                lambda,
                recall,
                feasible,
                residual,
                iterations: iter + 1,
                starved_deck: None,
            };
        }
    }
    // no convergence within budget: conservatively infeasible
    let recall = recall_vector(mu, &lambda, theta).unwrap_or_else(|| vec![0.0; n]);
    let residual = flow_residual(&lambda, &recall, lambda_ext);
    FlowSolution {
        lambda,
        recall,
        feasible: false,
        residual,
        iterations: max_iter,
        starved_deck: None,
    }
}

/// Solve the flow-balance fixed point for a given service schedule and
/// external arrival rate. Infeasibility is a verdict, not a failure.
pub fn solve_flow_balance(mu: &[f64], lambda_ext: f64, theta: f64) -> FlowSolution {
    solve_flow_balance_capped(mu, lambda_ext, theta, FLOW_MAX_ITER)
}

/// Largest external arrival rate for which the flow-balance system stays
/// feasible under a fixed service schedule, found by bisection.
pub fn max_feasible_arrival(mu: &[f64], theta: f64) -> f64 {
    // every deck carries at least the external flow, so the threshold is
    // below the smallest service rate
    let hi0 = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-8 * mu.iter().sum::<f64>();
    let mut lo = 0.0;
    let mut hi = hi0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if solve_flow_balance(mu, mid, theta).feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// softmax of `z`, scaled to sum to `total`.
fn softmax_scaled(z: &[f64], total: f64) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum * total).collect()
}

/// Feasibility margin `min_k (mu_k - lambda_k)` of a candidate schedule;
/// negative (or forced negative) when the flow system is infeasible.
fn feasibility_margin(mu: &[f64], lambda_ext: f64, theta: f64, max_iter: usize) -> f64 {
    let sol = solve_flow_balance_capped(mu, lambda_ext, theta, max_iter);
    let m = mu
        .iter()
        .zip(&sol.lambda)
        .map(|(m, l)| m - l)
        .fold(f64::INFINITY, f64::min);
    if sol.feasible {
        m
    } else {
        m.min(0.0) - 1e-9
    }
}

/// Arrival-rate multipliers of the equal-margin construction: with all deck
/// margins equal to `m`, `P_k` depends only on `m`, and the cut identities
/// make each `lambda_k` proportional to `lambda_ext`. Returns the
/// multipliers `c_k = lambda_k / lambda_ext`.
fn equal_margin_multipliers(n: usize, m: f64, theta: f64) -> Vec<f64> {
    let recall: Vec<f64> = (1..=n).map(|k| m / (m + theta / k as f64)).collect();
    back_substitute(&recall, 1.0)
}

/// Throughput of the best equal-margin schedule: maximize
/// `lambda_ext = (U - n m) / (1 + C(m))` over the common margin `m`.
/// Returns `(lambda_ext, m, mu)`.
fn equal_margin_schedule(n: usize, budget: f64, theta: f64) -> (f64, f64, Vec<f64>) {
    let objective = |m: f64| {
        if m <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let c: f64 = equal_margin_multipliers(n, m, theta).iter().sum();
        (budget - n as f64 * m) / (1.0 + c)
    };
    // coarse log-grid scan, then golden refinement around the best cell
    let lo = (budget / n as f64) * 1e-9;
    let hi = budget / n as f64;
    let mut best_m = lo;
    let mut best_v = f64::NEG_INFINITY;
    let steps = 400;
    for i in 0..=steps {
        let m = lo * (hi / lo).powf(i as f64 / steps as f64);
        let v = objective(m);
        if v > best_v {
            best_v = v;
            best_m = m;
        }
    }
    let m = golden_section_max(
        |lm: f64| objective(lm.exp()),
        (best_m * 0.5).max(lo).ln(),
        (best_m * 2.0).min(hi).ln(),
        1e-12,
        300,
    )
    .exp();
    let lambda_ext = objective(m).max(0.0);
    let lambda = equal_margin_multipliers(n, m, theta);
    let mu = lambda.iter().map(|c| c * lambda_ext + m).collect();
    (lambda_ext, m, mu)
}

/// Search the service-rate simplex (total `budget_mu`) for the schedule
/// maximizing the feasibility margin at a given arrival rate.
fn best_mu_for_rate(
    n: usize,
    budget_mu: f64,
    lambda_ext: f64,
    theta: f64,
    warm: Option<&[f64]>,
    multi_start: bool,
) -> (f64, Vec<f64>) {
    let objective = |z: &[f64]| {
        let mu = softmax_scaled(z, budget_mu);
        -feasibility_margin(&mu, lambda_ext, theta, FLOW_SEARCH_ITER)
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = warm {
        let total: f64 = w.iter().sum();
        if total > 0.0 && w.iter().all(|&x| x > 0.0) {
            starts.push(w.iter().map(|x| (x / total).ln()).collect());
        }
    }
    starts.push(vec![0.0; n]); // uniform
    starts.push((1..=n).map(|k| -0.5 * (k as f64).ln()).collect()); // k^{-1/2}
    starts.push((1..=n).map(|k| -(k as f64).ln()).collect()); // k^{-1}
    if multi_start {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6c71_6c61 ^ lambda_ext.to_bits());
        for _ in 0..6 {
            starts.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
    }
    let evals = if multi_start { 400 + 60 * n } else { 200 + 30 * n };
    let results: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|start| {
            let r = nelder_mead_min(objective, start, 0.3, 1e-12 * budget_mu.max(1e-30), evals);
            (-r.value, softmax_scaled(&r.x, budget_mu))
        })
        .collect();
    results
        .into_iter()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("at least one start")
}

/// Pool-adjacent-violators projection onto non-increasing sequences
/// (least squares). Preserves the sum of the input.
fn isotonic_non_increasing(v: &[f64]) -> Vec<f64> {
    // blocks of (sum, len); merge while the running means increase
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() >= 2 {
            let (s2, n2) = blocks[blocks.len() - 1];
            let (s1, n1) = blocks[blocks.len() - 2];
            if s1 / n1 as f64 >= s2 / n2 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, n1 + n2);
        }
    }
    let mut out = Vec::with_capacity(v.len());
    for (s, n) in blocks {
        out.extend(std::iter::repeat(s / n as f64).take(n));
    }
    out
}

/// Project a schedule's interior margins (decks 2..n-1) onto the
/// non-increasing shape the optimum is expected to have, re-solving the
/// flows after each projection. The projection preserves the service
/// budget. Returns the smoothed rates only if they stay feasible at the
/// same arrival rate and actually achieve non-increasing interior margins.
fn smooth_interior_margins(mu: &[f64], lambda_ext: f64, theta: f64) -> Option<Vec<f64>> {
    let n = mu.len();
    if n < 4 {
        return None;
    }
    let mut mu = mu.to_vec();
    for _ in 0..200 {
        let sol = solve_flow_balance(&mu, lambda_ext, theta);
        if !sol.feasible {
            return None;
        }
        let margins: Vec<f64> = mu.iter().zip(&sol.lambda).map(|(m, l)| m - l).collect();
        let iso = isotonic_non_increasing(&margins[1..n - 1]);
        let shift = iso
            .iter()
            .zip(&margins[1..n - 1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        for k in 1..n - 1 {
            mu[k] = sol.lambda[k] + iso[k - 1];
        }
        if shift < 1e-13 {
            break;
        }
    }
    let sol = solve_flow_balance(&mu, lambda_ext, theta);
    if !sol.feasible {
        return None;
    }
    let ok = (1..n - 2).all(|k| {
        let m_k = mu[k] - sol.lambda[k];
        let m_next = mu[k + 1] - sol.lambda[k + 1];
        m_k >= m_next
    });
    ok.then_some(mu)
}

/// Solve the static planning problem: choose `lambda_ext` and the deck
/// service rates within the review budget to maximize steady-state
/// throughput. Outer bisection on the arrival rate; at each probe a
/// Nelder-Mead multi-start over the service-rate simplex decides whether
/// any schedule keeps the flow system feasible. The equal-margin schedule
/// (all deck margins equal) provides an analytic warm start and an initial
/// feasible lower bound.
pub fn optimize_schedule(n: usize, budget: f64, theta: f64) -> Result<(Schedule, FlowSolution), PlanError> {
    if n == 0 {
        return Err(PlanError::InvalidInput("deck count must be >= 1".into()));
    }
    if budget <= 0.0 || theta <= 0.0 {
        return Err(PlanError::InvalidInput("budget and theta must be positive".into()));
    }

    let (lambda_eq, _m_eq, mu_eq) = equal_margin_schedule(n, budget, theta);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lo = 0.0;
    if lambda_eq > 0.0 && solve_flow_balance(&mu_eq, lambda_eq, theta).feasible {
        lo = lambda_eq;
        best = Some((lambda_eq, mu_eq.clone()));
    }
    let mut hi = budget;
    let mut warm: Option<Vec<f64>> = Some(mu_eq);
    let tol = 1e-6 * budget;
    let mut step = 0usize;
    while hi - lo > tol && step < 60 {
        let mid = 0.5 * (lo + hi);
        let (margin, mu) = best_mu_for_rate(n, budget - mid, mid, theta, warm.as_deref(), step < 3);
        if margin > 0.0 && solve_flow_balance(&mu, mid, theta).feasible {
            lo = mid;
            warm = Some(mu.clone());
            best = Some((mid, mu));
        } else {
            hi = mid;
        }
        step += 1;
    }

    let (lambda_ext, mu) = best.ok_or_else(|| {
        PlanError::InvalidInput("no feasible schedule found (budget or theta out of range)".into())
    })?;
    // polish the service rates at the final arrival rate
    let (margin, polished) = best_mu_for_rate(n, budget - lambda_ext, lambda_ext, theta, Some(&mu), true);
    let mut mu = if margin > 0.0 && solve_flow_balance(&polished, lambda_ext, theta).feasible {
        polished
    } else {
        mu
    };
    // the simplex search leaves ~1% noise on the interior margins; project
    // onto the non-increasing margin shape when that stays feasible
    if let Some(smoothed) = smooth_interior_margins(&mu, lambda_ext, theta) {
        mu = smoothed;
    }
    let flow = solve_flow_balance(&mu, lambda_ext, theta);
    Ok((
        Schedule { decks: n, lambda_ext, mu, theta, budget },
        flow,
    ))
}

/// One parallel network per difficulty bin, coupled through the shared
/// review budget. The budget split across bins is optimized by coordinate
/// ascent (golden-section on pairwise transfers), with the single-bin
/// planner as the inner solver. Bin throughputs are weighted by `weights`
/// (unweighted sum when `None`).
pub fn optimize_multi_difficulty(
    n: usize,
    budget: f64,
    thetas: &[f64],
    weights: Option<&[f64]>,
) -> Result<Vec<(Schedule, FlowSolution)>, PlanError> {
    if thetas.is_empty() {
        return Err(PlanError::InvalidInput("at least one difficulty bin required".into()));
    }
    if thetas.iter().any(|&t| t <= 0.0) {
        return Err(PlanError::InvalidInput("difficulties must be positive".into()));
    }
    let b = thetas.len();
    if let Some(w) = weights {
        if w.len() != b || w.iter().any(|&x| x <= 0.0) {
            return Err(PlanError::InvalidInput("weights must be positive, one per bin".into()));
        }
    }
    if b == 1 {
        return Ok(vec![optimize_schedule(n, budget, thetas[0])?]);
    }

    let weight = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    // value of giving a bin some budget; memoless, so keep evaluations cheap
    let bin_value = |i: usize, share: f64| -> (f64, Option<(Schedule, FlowSolution)>) {
        if share <= 1e-9 * budget {
            return (0.0, None);
        }
        match optimize_schedule(n, share, thetas[i]) {
            Ok((s, f)) => (weight(i) * s.lambda_ext, Some((s, f))),
            Err(_) => (0.0, None),
        }
    };

    // split-search probes repeat across sweeps; cache the scalar values
    let cache: std::cell::RefCell<std::collections::HashMap<(usize, u64), f64>> =
        std::cell::RefCell::new(std::collections::HashMap::new());
    let bin_value_cached = |i: usize, share: f64| -> f64 {
        let key = (i, share.to_bits());
        if let Some(&v) = cache.borrow().get(&key) {
            return v;
        }
        let v = bin_value(i, share).0;
        cache.borrow_mut().insert(key, v);
        v
    };

    let mut shares = vec![budget / b as f64; b];
    let mut solutions: Vec<Option<(Schedule, FlowSolution)>> = Vec::new();
    let mut values = vec![0.0; b];
    for i in 0..b {
        let (v, s) = bin_value(i, shares[i]);
        values[i] = v;
        solutions.push(s);
    }
    let sweeps = 3;
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for i in 0..b {
            for j in (i + 1)..b {
                let pool = shares[i] + shares[j];
                if pool <= 0.0 {
                    continue;
                }
                let eval =
                    |s: f64| bin_value_cached(i, s * pool) + bin_value_cached(j, (1.0 - s) * pool);
                // The total can be convex in the split (throughput has
                // increasing returns in budget), so scan coarsely before
                // refining with golden section.
                let grid = 13;
                let mut s0 = 0.5;
                let mut v0 = f64::NEG_INFINITY;
                for g in 0..=grid {
                    let s = 0.02 + 0.96 * g as f64 / grid as f64;
                    let v = eval(s);
                    if v > v0 {
                        v0 = v;
                        s0 = s;
                    }
                }
                let half_cell = 0.96 / grid as f64;
                let s = golden_section_max(
                    eval,
                    (s0 - half_cell).max(0.02),
                    (s0 + half_cell).min(0.98),
                    1e-3,
                    40,
                );
                let new_i = s * pool;
                moved = moved.max((new_i - shares[i]).abs());
                shares[i] = new_i;
                shares[j] = pool - new_i;
                let (vi, si) = bin_value(i, shares[i]);
                let (vj, sj) = bin_value(j, shares[j]);
                values[i] = vi;
                values[j] = vj;
                solutions[i] = si;
                solutions[j] = sj;
            }
        }
        if moved < 1e-4 * budget {
            break;
        }
    }

    solutions
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                PlanError::InvalidInput(format!("bin {i} received no feasible budget share"))
            })
        })
        .collect()
}

/// One row of a sensitivity table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub param: f64,
    pub lambda_star: f64,
    pub mu: Vec<f64>,
}

/// Maximum learning rate as a function of item difficulty.
pub fn sensitivity_theta(n: usize, budget: f64, thetas: &[f64]) -> Result<Vec<SensitivityPoint>, PlanError> {
    thetas
        .iter()
        .map(|&theta| {
            let (s, _) = optimize_schedule(n, budget, theta)?;
            Ok(SensitivityPoint { param: theta, lambda_star: s.lambda_ext, mu: s.mu })
        })
        .collect()
}

/// Maximum learning rate as a function of review budget.
pub fn sensitivity_budget(n: usize, theta: f64, budgets: &[f64]) -> Result<Vec<SensitivityPoint>, PlanError> {
    budgets
        .iter()
        .map(|&budget| {
            let (s, _) = optimize_schedule(n, budget, theta)?;
            Ok(SensitivityPoint { param: budget, lambda_star: s.lambda_ext, mu: s.mu })
        })
        .collect()
}
