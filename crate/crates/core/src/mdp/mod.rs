//! The recommendation-count MDP.
//!
//! The state `R` is the number of distinct channels recommended at the end of
//! a slot, `0..=min(M, N)`. The action is the branching probability `P_rec`
//! with which each user directs its next choice into the recommended set.
//! The reward of landing in `R'` is `R' * B`.

mod chain;
mod dp;
mod transition;

pub use chain::{
    build_chain, chain_trajectory_average, expected_reward, policy_throughput, reward,
    stationary_distribution, stationary_power_iteration, PolicyEvaluator, TransitionMatrix,
};
pub use dp::{discounted_value_iteration, relative_value_iteration, DiscountedSolution, RviSolution};
pub use transition::{
    saturation_row, saturation_transition, transition_prob_exact, transition_prob_infinite_m,
    transition_prob_paper, transition_row, transition_row_exact, transition_row_infinite_m,
    transition_row_mc, transition_row_paper, TransitionKernel,
};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Smallest admissible branching probability when an action must be interior.
pub const ACTION_MIN: f64 = 1e-6;
/// Largest admissible branching probability when an action must be interior.
pub const ACTION_MAX: f64 = 1.0 - 1e-6;

/// Tolerance on row sums of exactly computed transition rows.
pub const EXACT_ROW_TOL: f64 = 1e-12;
/// Tolerance on row sums of rows evaluated with the closed-form triple sum.
pub const CLOSED_FORM_ROW_TOL: f64 = 1e-9;
/// Fixed-point residual bound for stationary distributions.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

/// What users do when the branch they picked has no channels in it
/// (`R = 0` for the recommended branch, `R = M` for the unrecommended one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroStateSemantics {
    /// Users who picked the empty branch stay silent for the slot.
    #[default]
    IdleBranch,
    /// The branch choice is skipped and every user picks uniformly among all `M` channels.
    RandomAccess,
}

/// Which transition-probability evaluation backs a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionFormula {
    /// The closed-form triple sum over compositions, evaluated term by term.
    Paper,
    /// Distinguishable users, surjection-count occupancy.
    #[default]
    Exact,
}

/// Homogeneous MDP instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpModel {
    pub m_channels: usize,
    pub n_users: usize,
    pub channel: ChannelParams,
    #[serde(default)]
    pub zero_state: ZeroStateSemantics,
}

impl MdpModel {
    pub fn new(m_channels: usize, n_users: usize, channel: ChannelParams) -> Result<Self> {
        let model = Self { m_channels, n_users, channel, zero_state: ZeroStateSemantics::IdleBranch };
        model.validate()?;
        Ok(model)
    }

    pub fn with_zero_state(mut self, zero_state: ZeroStateSemantics) -> Self {
        self.zero_state = zero_state;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_channels == 0 || self.n_users == 0 {
            return Err(Error::Config("need at least one channel and one user".into()));
        }
        if self.m_channels > 64 || self.n_users > 1024 {
            return Err(Error::Config(format!(
                "MDP supports M <= 64 and N <= 1024 (got M={}, N={})",
                self.m_channels, self.n_users
            )));
        }
        self.channel.validate()
    }

    pub fn max_state(&self) -> usize {
        self.m_channels.min(self.n_users)
    }

    pub fn num_states(&self) -> usize {
        self.max_state() + 1
    }

    /// Per-state rewards `U_R = R * B`.
    pub fn state_rewards(&self) -> Vec<f64> {
        (0..self.num_states()).map(|r| reward(r, self.channel.rate_b)).collect()
    }
}

/// A stationary policy: branching probability per state `R`.
///
/// Candidates produced by the stochastic search may carry entries outside
/// `(0, 1)`; [`Policy::is_feasible`] tells them apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy {
    pub p_rec: Vec<f64>,
}

impl Policy {
    /// Build a policy, rejecting entries outside the open unit interval.
    pub fn new(p_rec: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = p_rec.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Domain { what: "policy entry", value: bad });
        }
        Ok(Self { p_rec })
    }

    /// Build without validation.
    pub fn unchecked(p_rec: Vec<f64>) -> Self {
        Self { p_rec }
    }

    pub fn constant(num_states: usize, p_rec: f64) -> Result<Self> {
        Self::new(vec![p_rec; num_states])
    }

    /// `P_rec(R) = R / N`, clamped into the interior.
    pub fn heuristic(model: &MdpModel) -> Self {
        Self {
            p_rec: (0..model.num_states()).map(|r| heuristic_action(r, model.n_users)).collect(),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.p_rec.iter().all(|&v| v > 0.0 && v < 1.0)
    }

    pub fn len(&self) -> usize {
        self.p_rec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_rec.is_empty()
    }

    pub fn get(&self, r: usize) -> f64 {
        self.p_rec[r]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p_rec
    }
}

/// Branching probability that puts one expected user on every recommended
/// channel: `R / N`.
pub fn heuristic_branching(r: usize, n_users: usize) -> f64 {
    r as f64 / n_users as f64
}

/// [`heuristic_branching`] clamped to `[ACTION_MIN, ACTION_MAX]`.
pub fn heuristic_action(r: usize, n_users: usize) -> f64 {
    clamp_action(heuristic_branching(r, n_users))
}

pub fn clamp_action(p: f64) -> f64 {
    p.clamp(ACTION_MIN, ACTION_MAX)
}

pub(crate) fn check_action(p_rec: f64) -> Result<()> {
    if p_rec > 0.0 && p_rec < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: "branching probability", value: p_rec })
    }
}

/// On-disk policy format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub b: f64,
    pub p_rec: Vec<f64>,
}

impl PolicyFile {
    pub fn new(model: &MdpModel, policy: &Policy) -> Self {
        Self {
            m: model.m_channels,
            n: model.n_users,
            p: model.channel.p,
            q: model.channel.q,
            b: model.channel.rate_b,
            p_rec: policy.p_rec.clone(),
        }
    }

    pub fn model(&self) -> Result<MdpModel> {
        MdpModel::new(self.m, self.n, ChannelParams::new(self.p, self.q, self.b)?)
    }

    pub fn policy(&self) -> Result<Policy> {
        let model = self.model()?;
        if self.p_rec.len() != model.num_states() {
            return Err(Error::Config(format!(
                "policy has {} entries, model has {} states",
                self.p_rec.len(),
                model.num_states()
            )));
        }
        Policy::new(self.p_rec.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("policy JSON: {e}")))
    }
}
