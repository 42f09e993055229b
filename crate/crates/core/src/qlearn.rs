//! Tabular Q-learning over the action grid {0.1, 0.2, ..., 1.0}.
//!
//! Exploration is Boltzmann with probabilities proportional to `exp(τ Q)`.
//! Training runs on the MDP chain itself: the next state is drawn from the
//! exact transition row and the reward is `R' · B`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{clamp_action, reward, MdpModel, Policy, TransitionKernel};

pub const NUM_ACTIONS: usize = 10;

/// Branching probability of action index `a`.
pub fn action_value(a: usize) -> f64 {
    (a + 1) as f64 / NUM_ACTIONS as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub q: Vec<[f64; NUM_ACTIONS]>,
}

impl QTable {
    pub fn zeros(num_states: usize) -> Self {
        Self { q: vec![[0.0; NUM_ACTIONS]; num_states] }
    }

    pub fn num_states(&self) -> usize {
        self.q.len()
    }

    pub fn max_value(&self, r: usize) -> f64 {
        self.q[r].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest entry in row `r`; ties go to the smaller index.
    pub fn greedy_action(&self, r: usize) -> usize {
        let row = &self.q[r];
        let mut best = 0;
        for a in 1..NUM_ACTIONS {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    /// Greedy policy with action values taken from the grid as-is.
    pub fn greedy_policy(&self) -> Policy {
        Policy::unchecked((0..self.num_states()).map(|r| action_value(self.greedy_action(r))).collect())
    }

    /// CSV rows `state,action_value,q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,action_value,q\n");
        for (r, row) in self.q.iter().enumerate() {
            for (a, v) in row.iter().enumerate() {
                out.push_str(&format!("{r},{},{v}\n", action_value(a)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QConfig {
    /// Initial step size `α_0`.
    pub alpha: f64,
    /// Step size at step `t` is `α_0 / (1 + t / alpha_decay)`; `None` keeps it constant.
    pub alpha_decay: Option<f64>,
    pub tau: f64,
    pub steps: usize,
    pub discount: f64,
}

impl Default for QConfig {
    fn default() -> Self {
        Self { alpha: 0.1, alpha_decay: Some(1e4), tau: 5.0, steps: 2_000_000, discount: 1.0 }
    }
}

impl QConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain { what: "alpha", value: self.alpha });
        }
        if !(self.tau > 0.0) {
            return Err(Error::Domain { what: "tau", value: self.tau });
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Domain { what: "discount", value: self.discount });
        }
        if let Some(d) = self.alpha_decay {
            if !(d > 0.0) {
                return Err(Error::Domain { what: "alpha_decay", value: d });
            }
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn alpha_at(&self, t: usize) -> f64 {
        match self.alpha_decay {
            Some(d) => self.alpha / (1.0 + t as f64 / d),
            None => self.alpha,
        }
    }
}

/// `Q(r,a) ← (1−α) Q(r,a) + α (reward + discount · max Q(r_next, ·))`.
pub fn q_update(table: &mut QTable, r: usize, a: usize, reward: f64, r_next: usize, alpha: f64, discount: f64) {
    let target = reward + discount * table.max_value(r_next);
    table.q[r][a] = (1.0 - alpha) * table.q[r][a] + alpha * target;
}

/// Boltzmann probabilities `exp(τ Q(r,a)) / Σ exp(τ Q(r,·))`.
pub fn softmax_probs(table: &QTable, r: usize, tau: f64) -> [f64; NUM_ACTIONS] {
    let top = table.max_value(r);
    let mut p = [0.0; NUM_ACTIONS];
    for (a, &q) in table.q[r].iter().enumerate() {
        p[a] = (tau * (q - top)).exp();
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

pub fn softmax_action<R: Rng + ?Sized>(table: &QTable, r: usize, tau: f64, rng: &mut R) -> usize {
    let p = softmax_probs(table, r, tau);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return a;
        }
    }
    NUM_ACTIONS - 1
}

#[derive(Debug, Clone)]
pub struct QOutcome {
    pub table: QTable,
    /// Greedy policy on the grid (may contain 1.0).
    pub policy: Policy,
}

impl QOutcome {
    /// The greedy policy with 1.0 moved inside the open action interval.
    pub fn interior_policy(&self) -> Policy {
        Policy::unchecked(self.policy.as_slice().iter().map(|&v| clamp_action(v)).collect())
    }
}

/// Train from state 0 for `cfg.steps` transitions.
pub fn train<R: Rng + ?Sized>(model: &MdpModel, cfg: &QConfig, rng: &mut R) -> Result<QOutcome> {
    train_on_grid(model, cfg, &(0..NUM_ACTIONS).collect::<Vec<_>>(), rng)
}

/// Train restricted to the action indices in `allowed`.
pub fn train_on_grid<R: Rng + ?Sized>(model: &MdpModel, cfg: &QConfig, allowed: &[usize], rng: &mut R) -> Result<QOutcome> {
    cfg.validate()?;
    model.validate()?;
    if allowed.is_empty() || allowed.iter().any(|&a| a >= NUM_ACTIONS) {
        return Err(Error::Config("allowed actions must be a nonempty subset of the grid".into()));
    }
    let kernel = TransitionKernel::exact(model);
    let s = model.num_states();
    let cdfs: Vec<Vec<Vec<f64>>> = (0..s)
        .map(|r| {
            (0..NUM_ACTIONS)
                .map(|a| {
                    let mut acc = 0.0;
                    kernel.row(r, clamp_action(action_value(a))).into_iter().map(|p| { acc += p; acc }).collect()
                })
                .collect()
        })
        .collect();
    let mut table = QTable::zeros(s);
    // actions outside the allowed set are never explored nor chosen
    let excluded = f64::NEG_INFINITY;
    let mut mask = [excluded; NUM_ACTIONS];
    for &a in allowed {
        mask[a] = 0.0;
    }
    for row in table.q.iter_mut() {
        *row = mask;
    }
    let mut r = 0usize;
    for t in 0..cfg.steps {
        let a = softmax_action(&table, r, cfg.tau, rng);
        let u: f64 = rng.random();
        let cdf = &cdfs[r][a];
        let r_next = cdf.iter().position(|&c| u < c).unwrap_or(s - 1);
        q_update(&mut table, r, a, reward(r_next, model.channel.rate_b), r_next, cfg.alpha_at(t), cfg.discount);
        r = r_next;
    }
    let policy = table.greedy_policy();
    Ok(QOutcome { table, policy })
}
