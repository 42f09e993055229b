//! Two-state Markov channels.
//!
//! Each primary channel alternates between `Busy` and `Idle`. From `Busy` it
//! turns idle with probability `p`; from `Idle` it turns busy with
//! probability `q`. The experiment families scale both by a dynamic factor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelState {
    Busy = 0,
    Idle = 1,
}

impl ChannelState {
    pub fn is_idle(self) -> bool {
        self == ChannelState::Idle
    }
}

/// Markov parameters and data rate of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Busy -> idle transition probability.
    pub p: f64,
    /// Idle -> busy transition probability.
    pub q: f64,
    /// Data rate in Mbps.
    #[serde(rename = "b")]
    pub rate_b: f64,
}

impl ChannelParams {
    pub fn new(p: f64, q: f64, rate_b: f64) -> Result<Self> {
        let params = Self { p, q, rate_b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("channel {name}={v} must lie in (0, 1]")));
            }
        }
        if !(self.rate_b > 0.0 && self.rate_b.is_finite()) {
            return Err(Error::Config(format!("channel rate {} must be positive", self.rate_b)));
        }
        Ok(())
    }

    /// Stationary probability that the channel is idle, `p / (p + q)`.
    pub fn stationary_idle_prob(&self) -> f64 {
        stationary_idle_prob(self)
    }

    pub fn with_rate(mut self, rate_b: f64) -> Self {
        self.rate_b = rate_b;
        self
    }
}

pub fn stationary_idle_prob(params: &ChannelParams) -> f64 {
    params.p / (params.p + params.q)
}

/// Advance one slot.
pub fn step_channel<R: Rng + ?Sized>(state: ChannelState, params: &ChannelParams, rng: &mut R) -> ChannelState {
    let u: f64 = rng.random();
    match state {
        ChannelState::Busy if u < params.p => ChannelState::Idle,
        ChannelState::Busy => ChannelState::Busy,
        ChannelState::Idle if u < params.q => ChannelState::Busy,
        ChannelState::Idle => ChannelState::Idle,
    }
}

/// Draw a state from the stationary distribution.
pub fn stationary_draw<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> ChannelState {
    if rng.random::<f64>() < params.stationary_idle_prob() {
        ChannelState::Idle
    } else {
        ChannelState::Busy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Type1,
    Type2,
}

impl FamilyKind {
    /// Largest dynamic factor that keeps every matrix entry inside [0, 1].
    pub fn max_epsilon(self) -> f64 {
        match self {
            FamilyKind::Type1 => 40.0,
            FamilyKind::Type2 => 100.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Type1 => "type1",
            FamilyKind::Type2 => "type2",
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "type1" | "1" => Ok(FamilyKind::Type1),
            "type2" | "2" => Ok(FamilyKind::Type2),
            other => Err(Error::Config(format!("unknown matrix family '{other}'"))),
        }
    }
}

/// A parameterized transition-matrix family used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixFamily {
    pub family: FamilyKind,
    pub epsilon: f64,
}

impl MatrixFamily {
    pub fn new(family: FamilyKind, epsilon: f64) -> Self {
        Self { family, epsilon }
    }

    /// Channel parameters at unit data rate.
    pub fn params(&self) -> Result<ChannelParams> {
        family_params(*self)
    }
}

/// Type1: `p = 0.005 eps, q = 0.025 eps`. Type2: `p = q = 0.01 eps`.
pub fn family_params(family: MatrixFamily) -> Result<ChannelParams> {
    let eps = family.epsilon;
    let max = family.family.max_epsilon();
    if !(eps > 0.0 && eps <= max) {
        return Err(Error::Config(format!(
            "dynamic factor {eps} out of range (0, {max}] for {}",
            family.family
        )));
    }
    let (p, q) = match family.family {
        FamilyKind::Type1 => (0.005 * eps, 0.025 * eps),
        FamilyKind::Type2 => (0.01 * eps, 0.01 * eps),
    };
    ChannelParams::new(p, q, 1.0)
}
