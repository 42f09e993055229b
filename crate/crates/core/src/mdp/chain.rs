//! Markov chains induced by stationary policies and their long-run throughput.

use rand::Rng;

use super::transition::{transition_row_paper, TransitionKernel};
use super::{MdpModel, Policy, TransitionFormula, EXACT_ROW_TOL, CLOSED_FORM_ROW_TOL, STATIONARY_RESIDUAL_TOL};
use crate::error::{Error, Result};

/// Row-stochastic matrix over recommendation states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Wrap rows after checking shape, sign and row sums against `tol`.
    pub fn new(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config("transition matrix must be square and nonempty".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) || (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// States that are not mutually reachable with state 0. Empty iff the
    /// chain is irreducible.
    pub fn unreachable_states(&self) -> Vec<usize> {
        let n = self.dim();
        let forward = self.reach(0, |i, j| self.rows[i][j] > 0.0);
        let backward = self.reach(0, |i, j| self.rows[j][i] > 0.0);
        (0..n).filter(|&s| !(forward[s] && backward[s])).collect()
    }

    pub fn is_irreducible(&self) -> bool {
        self.unreachable_states().is_empty()
    }

    fn reach(&self, start: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let n = self.dim();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && edge(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// `‖πP − π‖∞`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| {
                let v: f64 = (0..n).map(|i| pi[i] * self.rows[i][j]).sum();
                (v - pi[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Chain of `model` under `policy`: row `i` uses action `policy[i]`.
pub fn build_chain(model: &MdpModel, policy: &Policy, formula: TransitionFormula) -> Result<TransitionMatrix> {
    if policy.len() != model.num_states() {
        return Err(Error::Config(format!(
            "policy has {} entries, model has {} states",
            policy.len(),
            model.num_states()
        )));
    }
    if let Some(&bad) = policy.as_slice().iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Domain { what: "policy entry", value: bad });
    }
    match formula {
        TransitionFormula::Exact => {
            let kernel = TransitionKernel::exact(model);
            let rows = policy.as_slice().iter().enumerate().map(|(r, &a)| kernel.row(r, a)).collect();
            TransitionMatrix::new(rows, EXACT_ROW_TOL)
        }
        TransitionFormula::Paper => {
            let rows = policy
                .as_slice()
                .iter()
                .enumerate()
                .map(|(r, &a)| transition_row_paper(model, r, a))
                .collect::<Result<Vec<_>>>()?;
            TransitionMatrix::new(rows, CLOSED_FORM_ROW_TOL)
        }
    }
}

/// Stationary law of an irreducible chain.
///
/// Solves `π (P − I) = 0` with the last balance equation replaced by
/// `Σ π = 1`, by Gaussian elimination with partial pivoting.
pub fn stationary_distribution(chain: &TransitionMatrix) -> Result<Vec<f64>> {
    let unreachable = chain.unreachable_states();
    if !unreachable.is_empty() {
        return Err(Error::Reducible { unreachable });
    }
    let pi = solve_stationary(chain.rows())?;
    let res = chain.residual(&pi);
    if res > STATIONARY_RESIDUAL_TOL {
        return Err(Error::Singular(format!("stationary residual {res:e} exceeds tolerance")));
    }
    Ok(pi)
}

fn solve_stationary(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rows.len();
    // a[j][i] = P[i][j] - δ_ij, i.e. the transposed system; last row = ones.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut eq: Vec<f64> = (0..n).map(|i| rows[i][j] - if i == j { 1.0 } else { 0.0 }).collect();
            eq.push(0.0);
            eq
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let mut pi: Vec<f64> = (0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    Ok(pi)
}

/// Power iteration on the lazy chain `(P + I) / 2`, which shares the
/// stationary law and is aperiodic.
pub fn stationary_power_iteration(chain: &TransitionMatrix, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = chain.dim();
    let mut pi = vec![1.0 / n as f64; n];
    for it in 0..max_iters {
        let mut next = vec![0.0; n];
        for (i, row) in chain.rows().iter().enumerate() {
            for (j, &pij) in row.iter().enumerate() {
                next[j] += 0.5 * pi[i] * pij;
            }
            next[i] += 0.5 * pi[i];
        }
        let delta = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if delta < tol {
            return Ok(pi);
        }
        if it + 1 == max_iters {
            return Err(Error::NoConvergence { iters: max_iters, residual: delta });
        }
    }
    Err(Error::NoConvergence { iters: max_iters, residual: f64::NAN })
}

/// Throughput of landing in state `r_next`: `r_next * rate_b`.
pub fn reward(r_next: usize, rate_b: f64) -> f64 {
    r_next as f64 * rate_b
}

/// Expected throughput of the next slot from state `r` under `p_rec`.
pub fn expected_reward(model: &MdpModel, r: usize, p_rec: f64, formula: TransitionFormula) -> Result<f64> {
    let row = super::transition_row(model, r, p_rec, formula)?;
    Ok(row.iter().enumerate().map(|(k, p)| p * reward(k, model.channel.rate_b)).sum())
}

/// Long-run average throughput `Σ_R Pr(R) U_R` of a policy, or `-inf` when
/// any entry lies outside `(0, 1)`.
pub fn policy_throughput(model: &MdpModel, policy: &Policy, formula: TransitionFormula) -> Result<f64> {
    if !policy.is_feasible() {
        return Ok(f64::NEG_INFINITY);
    }
    let chain = build_chain(model, policy, formula)?;
    let pi = stationary_distribution(&chain)?;
    Ok(dot(&pi, &model.state_rewards()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reusable evaluator for many policies of one model (exact rows).
#[derive(Debug, Clone)]
pub struct PolicyEvaluator {
    kernel: TransitionKernel,
    rewards: Vec<f64>,
}

impl PolicyEvaluator {
    pub fn new(model: &MdpModel) -> Self {
        Self { kernel: TransitionKernel::exact(model), rewards: model.state_rewards() }
    }

    pub fn from_kernel(kernel: TransitionKernel, rate_b: f64) -> Self {
        let rewards = (0..kernel.num_states()).map(|r| reward(r, rate_b)).collect();
        Self { kernel, rewards }
    }

    pub fn num_states(&self) -> usize {
        self.kernel.num_states()
    }

    pub fn chain(&self, p_rec: &[f64]) -> Result<TransitionMatrix> {
        let rows = p_rec.iter().enumerate().map(|(r, &a)| self.kernel.row(r, a)).collect();
        TransitionMatrix::new(rows, EXACT_ROW_TOL)
    }

    /// Same contract as [`policy_throughput`]; numerical failures also map to `-inf`.
    pub fn throughput(&self, p_rec: &[f64]) -> f64 {
        if p_rec.len() != self.num_states() || !p_rec.iter().all(|&v| v > 0.0 && v < 1.0) {
            return f64::NEG_INFINITY;
        }
        match self.chain(p_rec).and_then(|c| stationary_distribution(&c)) {
            Ok(pi) => dot(&pi, &self.rewards),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Time-average of `rewards[state]` along a simulated trajectory of
/// `steps` transitions started in state 0. Returns `(mean, standard error)`
/// with the error from `batches` batch means.
pub fn chain_trajectory_average<R: Rng + ?Sized>(
    chain: &TransitionMatrix,
    rewards: &[f64],
    steps: usize,
    batches: usize,
    rng: &mut R,
) -> (f64, f64) {
    let cdf: Vec<Vec<f64>> = chain
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, &p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let per = (steps / batches).max(1);
    let mut state = 0usize;
    let mut means = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut acc = 0.0;
        for _ in 0..per {
            let u: f64 = rng.random();
            let row = &cdf[state];
            state = row.iter().position(|&c| u < c).unwrap_or(row.len() - 1);
            acc += rewards[state];
        }
        means.push(acc / per as f64);
    }
    crate::stats::mean_se(&means)
}
