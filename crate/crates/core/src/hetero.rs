//! Heterogeneous channels: each channel has its own `p`, `q` and rate.
//!
//! The weight policy keeps two numbers per channel, one used while the
//! channel is recommended and one while it is not; users pick a channel with
//! probability proportional to its current weight. Policies are scored by
//! simulation with common random numbers, so candidates are compared under
//! identical channel realizations.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, FamilyKind, MatrixFamily};
use crate::error::{Error, Result};
use crate::mdp::{clamp_action, ACTION_MAX, ACTION_MIN};
use crate::mras::{optimize_projected, MrasConfig, MrasTrace};
use crate::sim::{run_simulation, Scheme, SimConfig};
use crate::stats::mean_se;
use crate::derive_seed;

/// Largest channel count accepted by [`tiny_full_hetero_oracle`].
pub const FULL_ORACLE_MAX_CHANNELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroModel {
    pub channels: Vec<ChannelParams>,
    pub n_users: usize,
}

impl HeteroModel {
    pub fn new(channels: Vec<ChannelParams>, n_users: usize) -> Result<Self> {
        let m = Self { channels, n_users };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.n_users == 0 {
            return Err(Error::Config("hetero model needs channels and users".into()));
        }
        if self.channels.len() > 64 {
            return Err(Error::Config("at most 64 channels".into()));
        }
        self.channels.iter().try_for_each(|c| c.validate())
    }

    pub fn m_channels(&self) -> usize {
        self.channels.len()
    }
}

/// Which channels are currently recommended.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeteroState {
    pub indicators: Vec<bool>,
}

impl HeteroState {
    pub fn from_mask(mask: usize, m: usize) -> Self {
        Self { indicators: (0..m).map(|c| mask >> c & 1 == 1).collect() }
    }

    pub fn mask(&self) -> usize {
        state_mask(&self.indicators)
    }
}

fn state_mask(flags: &[bool]) -> usize {
    flags.iter().enumerate().filter(|(_, &f)| f).map(|(c, _)| 1usize << c).sum()
}

/// Channel rates of the mixed-rate scenario, slowest first.
pub const MIXED_RATES: [f64; 10] = [0.2, 0.6, 0.8, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 20.0];

/// Which half of the mixed-rate scenario gets the mostly idle channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedLayout {
    /// The five slow channels are Type 2 (idle half the time), the fast ones Type 1.
    LowRateIdle,
    /// The five fast channels are Type 2, the slow ones Type 1.
    HighRateIdle,
}

impl MixedLayout {
    pub fn name(self) -> &'static str {
        match self {
            MixedLayout::LowRateIdle => "low_rate_idle",
            MixedLayout::HighRateIdle => "high_rate_idle",
        }
    }
}

/// The ten mixed-rate channels at dynamic factor `epsilon`.
pub fn mixed_rate_channels(layout: MixedLayout, epsilon: f64) -> Result<Vec<ChannelParams>> {
    MIXED_RATES
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let slow = i < MIXED_RATES.len() / 2;
            let idle = match layout {
                MixedLayout::LowRateIdle => slow,
                MixedLayout::HighRateIdle => !slow,
            };
            let family = if idle { FamilyKind::Type2 } else { FamilyKind::Type1 };
            Ok(MatrixFamily::new(family, epsilon).params()?.with_rate(b))
        })
        .collect()
}

/// Per-channel access weights for the recommended and unrecommended cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroWeightPolicy {
    pub w_rec: Vec<f64>,
    pub w_unrec: Vec<f64>,
}

impl HeteroWeightPolicy {
    pub fn new(w_rec: Vec<f64>, w_unrec: Vec<f64>) -> Result<Self> {
        let p = Self { w_rec, w_unrec };
        p.validate_for(p.w_rec.len())?;
        Ok(p)
    }

    /// Same weight for every channel.
    pub fn symmetric(m: usize, rec: f64, unrec: f64) -> Result<Self> {
        Self::new(vec![rec; m], vec![unrec; m])
    }

    /// Decode `[w_rec.., w_unrec..]`; `None` if any entry lies outside (0, 1).
    pub fn from_params(params: &[f64]) -> Option<Self> {
        if params.len() % 2 != 0 || params.is_empty() || !params.iter().all(|&v| v > 0.0 && v < 1.0) {
            return None;
        }
        let m = params.len() / 2;
        Some(Self { w_rec: params[..m].to_vec(), w_unrec: params[m..].to_vec() })
    }

    pub fn to_params(&self) -> Vec<f64> {
        self.w_rec.iter().chain(&self.w_unrec).copied().collect()
    }

    pub fn m_channels(&self) -> usize {
        self.w_rec.len()
    }

    pub fn is_feasible(&self) -> bool {
        self.w_rec.len() == self.w_unrec.len() && self.to_params().iter().all(|&v| v > 0.0 && v < 1.0)
    }

    pub fn validate_for(&self, m: usize) -> Result<()> {
        if self.w_rec.len() != m || self.w_unrec.len() != m {
            return Err(Error::Config(format!("weight policy must have {m} entries per side")));
        }
        for &v in self.w_rec.iter().chain(&self.w_unrec) {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain { what: "access weight", value: v });
            }
        }
        Ok(())
    }
}

/// Channel choice probabilities, proportional to each channel's weight in
/// its current recommendation state.
pub fn access_probs(policy: &HeteroWeightPolicy, recommended: &[bool]) -> Vec<f64> {
    let w: Vec<f64> = recommended
        .iter()
        .enumerate()
        .map(|(c, &on)| if on { policy.w_rec[c] } else { policy.w_unrec[c] })
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// An access vector for each of the `2^M` recommendation patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAccessTable {
    pub m_channels: usize,
    /// Indexed by the pattern's bitmask (bit `c` set iff channel `c` is recommended).
    pub probs: Vec<Vec<f64>>,
}

impl StateAccessTable {
    /// Normalize `M·2^M` raw weights, state by state. `None` if any weight
    /// lies outside (0, 1).
    pub fn from_raw(m: usize, raw: &[f64]) -> Option<Self> {
        if raw.len() != m << m || !raw.iter().all(|&v| v > 0.0 && v < 1.0) {
            return None;
        }
        let probs = raw
            .chunks(m)
            .map(|w| {
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            })
            .collect();
        Some(Self { m_channels: m, probs })
    }

    /// Table reproducing a weight policy exactly.
    pub fn from_weights(policy: &HeteroWeightPolicy) -> Self {
        let m = policy.m_channels();
        let probs = (0..1usize << m).map(|mask| access_probs(policy, &HeteroState::from_mask(mask, m).indicators)).collect();
        Self { m_channels: m, probs }
    }

    pub fn probs_for(&self, recommended: &[bool]) -> &[f64] {
        &self.probs[state_mask(recommended)]
    }

    pub fn validate_for(&self, m: usize) -> Result<()> {
        if self.m_channels != m || self.probs.len() != 1usize << m || self.probs.iter().any(|p| p.len() != m) {
            return Err(Error::Config(format!("access table does not match {m} channels")));
        }
        for p in &self.probs {
            if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Config("access table rows must be probability vectors".into()));
            }
        }
        Ok(())
    }
}

/// Monte-Carlo evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroEval {
    pub horizon: usize,
    pub replications: usize,
    /// Replication `i` runs with `derive_seed(base_seed, i)` regardless of the
    /// policy being scored.
    pub base_seed: u64,
}

impl Default for HeteroEval {
    fn default() -> Self {
        Self { horizon: 20_000, replications: 10, base_seed: 0 }
    }
}

/// Time-average throughput of `scheme` in each replication.
pub fn evaluate_scheme_reps(model: &HeteroModel, scheme: &Scheme, eval: &HeteroEval) -> Result<Vec<f64>> {
    (0..eval.replications as u64)
        .map(|i| {
            let cfg = SimConfig {
                channels: model.channels.clone(),
                n_users: model.n_users,
                horizon_t: eval.horizon,
                buffer_w: 1,
                scheme: scheme.clone(),
                contention: Default::default(),
                seed: derive_seed(eval.base_seed, i),
                record_trace: false,
            };
            run_simulation(&cfg).map(|r| r.average_throughput)
        })
        .collect()
}

/// Mean throughput and its standard error across replications.
pub fn evaluate_scheme(model: &HeteroModel, scheme: &Scheme, eval: &HeteroEval) -> Result<(f64, f64)> {
    let reps = evaluate_scheme_reps(model, scheme, eval)?;
    Ok(mean_se(&reps))
}

/// Replication-averaged throughput of a weight policy; `-inf` when the
/// weights are infeasible.
pub fn evaluate_hetero(model: &HeteroModel, policy: &HeteroWeightPolicy, eval: &HeteroEval) -> f64 {
    if policy.validate_for(model.m_channels()).is_err() {
        return f64::NEG_INFINITY;
    }
    match evaluate_scheme(model, &Scheme::HeteroWeights(policy.clone()), eval) {
        Ok((mean, _)) => mean,
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone)]
pub struct HeteroSolution {
    pub policy: HeteroWeightPolicy,
    pub phi: f64,
    pub converged: bool,
    pub trace: MrasTrace,
}

fn clamp_weights(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = clamp_action(*v));
}

/// MRAS over the `2M` access weights. Sampled weights are clamped into
/// `[1e-6, 1 − 1e-6]` before scoring, so every candidate is a valid policy.
pub fn mras_solve_hetero<R: Rng + ?Sized>(
    model: &HeteroModel,
    cfg: &MrasConfig,
    eval: &HeteroEval,
    rng: &mut R,
) -> Result<HeteroSolution> {
    model.validate()?;
    let dim = 2 * model.m_channels();
    let out = optimize_projected(
        dim,
        cfg,
        clamp_weights,
        |x| match HeteroWeightPolicy::from_params(x) {
            Some(p) => evaluate_hetero(model, &p, eval),
            None => f64::NEG_INFINITY,
        },
        rng,
    )?;
    let params: Vec<f64> = out.params.iter().map(|&v| clamp_action(v)).collect();
    let policy = HeteroWeightPolicy::from_params(&params).ok_or(Error::NoFeasibleCandidate)?;
    Ok(HeteroSolution { policy, phi: out.phi, converged: out.converged, trace: out.trace })
}

#[derive(Debug, Clone)]
pub struct FullHeteroSolution {
    pub table: StateAccessTable,
    pub phi: f64,
    pub converged: bool,
    pub trace: MrasTrace,
}

/// MRAS over a separate access vector for every recommendation pattern.
/// Raw weights are clamped like in [`mras_solve_hetero`] and normalized per
/// pattern. Only for `M ≤ 4`; the search has `M·2^M` variables.
pub fn tiny_full_hetero_oracle<R: Rng + ?Sized>(
    model: &HeteroModel,
    cfg: &MrasConfig,
    eval: &HeteroEval,
    rng: &mut R,
) -> Result<FullHeteroSolution> {
    model.validate()?;
    let m = model.m_channels();
    if m > FULL_ORACLE_MAX_CHANNELS {
        return Err(Error::Config(format!(
            "full access-table search supports at most {FULL_ORACLE_MAX_CHANNELS} channels, got {m}"
        )));
    }
    let score = |x: &[f64]| match StateAccessTable::from_raw(m, x) {
        Some(t) => evaluate_scheme(model, &Scheme::StateAccess(t), eval).map(|(v, _)| v).unwrap_or(f64::NEG_INFINITY),
        None => f64::NEG_INFINITY,
    };
    let out = optimize_projected(m << m, cfg, clamp_weights, score, rng)?;
    let raw: Vec<f64> = out.params.iter().map(|&v| v.clamp(ACTION_MIN, ACTION_MAX)).collect();
    let table = StateAccessTable::from_raw(m, &raw).ok_or(Error::NoFeasibleCandidate)?;
    Ok(FullHeteroSolution { table, phi: out.phi, converged: out.converged, trace: out.trace })
}

/// Best constant branching probability over `grid` under the static rule,
/// scored with the same evaluation settings. Returns `(p_rec, mean, se)`.
pub fn best_static(model: &HeteroModel, grid: &[f64], eval: &HeteroEval) -> Result<(f64, f64, f64)> {
    let scored: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&p_rec| evaluate_scheme(model, &Scheme::Static { p_rec }, eval).map(|(m, s)| (p_rec, m, s)))
        .collect::<Result<_>>()?;
    scored
        .into_iter()
        .fold(None, |best: Option<(f64, f64, f64)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
        .ok_or_else(|| Error::Config("empty static grid".into()))
}

/// On-disk form of a weight policy together with its model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroPolicyFile {
    pub channels: Vec<ChannelParams>,
    pub n: usize,
    pub w_rec: Vec<f64>,
    pub w_unrec: Vec<f64>,
}

impl HeteroPolicyFile {
    pub fn new(model: &HeteroModel, policy: &HeteroWeightPolicy) -> Self {
        Self {
            channels: model.channels.clone(),
            n: model.n_users,
            w_rec: policy.w_rec.clone(),
            w_unrec: policy.w_unrec.clone(),
        }
    }

    pub fn model(&self) -> Result<HeteroModel> {
        HeteroModel::new(self.channels.clone(), self.n)
    }

    pub fn policy(&self) -> Result<HeteroWeightPolicy> {
        let p = HeteroWeightPolicy::new(self.w_rec.clone(), self.w_unrec.clone())?;
        p.validate_for(self.channels.len())?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad hetero policy JSON: {e}")))
    }
}
