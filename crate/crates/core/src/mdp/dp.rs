//! Dynamic-programming oracles over a discretized action set.

use super::chain::{reward, PolicyEvaluator};
use super::transition::TransitionKernel;
use super::{check_action, MdpModel, Policy};
use crate::error::{Error, Result};

/// Mixing weight of the aperiodicity transform `τP + (1−τ)I`.
const APERIODIC_TAU: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct RviSolution {
    pub policy: Policy,
    /// Exact long-run throughput of `policy`.
    pub gain: f64,
    /// Lower and upper bounds on the optimal grid gain at termination.
    pub gain_bounds: (f64, f64),
    pub iterations: usize,
}

/// Relative value iteration for the average-reward problem restricted to
/// `action_grid`. Stops when the span of successive differences drops below
/// `tol`.
pub fn relative_value_iteration(
    model: &MdpModel,
    action_grid: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<RviSolution> {
    if action_grid.is_empty() {
        return Err(Error::Config("empty action grid".into()));
    }
    for &a in action_grid {
        check_action(a)?;
    }
    let kernel = TransitionKernel::exact(model);
    let ns = kernel.num_states();
    let rewards = model.state_rewards();

    // rows[s][a], expected one-step reward[s][a]
    let rows: Vec<Vec<Vec<f64>>> =
        (0..ns).map(|s| action_grid.iter().map(|&a| kernel.row(s, a)).collect()).collect();
    let exp_reward: Vec<Vec<f64>> = rows
        .iter()
        .map(|per_a| per_a.iter().map(|row| dot(row, &rewards)).collect())
        .collect();

    let tau = APERIODIC_TAU;
    let mut h = vec![0.0; ns];
    let mut greedy = vec![0usize; ns];
    for it in 1..=max_iters {
        let mut th = vec![0.0; ns];
        for s in 0..ns {
            let (best_a, best) = argmax((0..action_grid.len()).map(|a| exp_reward[s][a] + dot(&rows[s][a], &h)));
            greedy[s] = best_a;
            th[s] = tau * best + (1.0 - tau) * h[s];
        }
        let diffs: Vec<f64> = th.iter().zip(&h).map(|(a, b)| a - b).collect();
        let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let offset = th[0];
        h = th.iter().map(|v| v - offset).collect();
        if hi - lo < tol {
            let policy = Policy::new(greedy.iter().map(|&a| action_grid[a]).collect())?;
            let gain = PolicyEvaluator::new(model).throughput(policy.as_slice());
            return Ok(RviSolution { policy, gain, gain_bounds: (lo / tau, hi / tau), iterations: it });
        }
        if it == max_iters {
            return Err(Error::NoConvergence { iters: max_iters, residual: hi - lo });
        }
    }
    unreachable!("loop returns on the last iteration")
}

/// Per-stage values and greedy actions of a finite-horizon discounted problem.
#[derive(Debug, Clone)]
pub struct DiscountedSolution {
    /// `values[t][R]` for `t = 0..horizon`; the last stage is the terminal `U_R`.
    pub values: Vec<Vec<f64>>,
    /// Greedy grid action for stages `0..horizon-1`.
    pub policies: Vec<Vec<f64>>,
}

/// Backward recursion `V_t(R) = max_a Σ_R' P[U_R' + β V_{t+1}(R')]` from
/// `V_T(R) = U_R`. Ties go to the smaller action.
pub fn discounted_value_iteration(
    kernel: &TransitionKernel,
    rate_b: f64,
    beta: f64,
    action_grid: &[f64],
    horizon: usize,
) -> Result<DiscountedSolution> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Config(format!("discount {beta} must lie in (0, 1)")));
    }
    if action_grid.is_empty() || horizon == 0 {
        return Err(Error::Config("need a nonempty action grid and horizon >= 1".into()));
    }
    let ns = kernel.num_states();
    let rewards: Vec<f64> = (0..ns).map(|r| reward(r, rate_b)).collect();
    let rows: Vec<Vec<Vec<f64>>> =
        (0..ns).map(|s| action_grid.iter().map(|&a| kernel.row(s, a)).collect()).collect();

    let mut values = vec![rewards.clone()];
    let mut policies = Vec::new();
    for _ in 1..horizon {
        let next = values.last().expect("nonempty");
        let target: Vec<f64> = rewards.iter().zip(next).map(|(u, v)| u + beta * v).collect();
        let mut v = vec![0.0; ns];
        let mut pol = vec![0.0; ns];
        for s in 0..ns {
            let (a, best) = argmax(rows[s].iter().map(|row| dot(row, &target)));
            v[s] = best;
            pol[s] = action_grid[a];
        }
        values.push(v);
        policies.push(pol);
    }
    values.reverse();
    policies.reverse();
    Ok(DiscountedSolution { values, policies })
}

fn argmax(it: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
