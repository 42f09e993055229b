//! Experiment configuration: a JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use specrec_core::channel::FamilyKind;
use specrec_core::hetero::MixedLayout;
use specrec_core::mras::MrasConfig;
use specrec_core::qlearn::QConfig;
use specrec_core::sim::Contention;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    SolveMdp,
    TrainQ,
    Simulate,
    Sweep,
    Hetero,
    Validate,
}

impl Campaign {
    pub fn name(self) -> &'static str {
        match self {
            Campaign::SolveMdp => "solve-mdp",
            Campaign::TrainQ => "train-q",
            Campaign::Simulate => "simulate",
            Campaign::Sweep => "sweep",
            Campaign::Hetero => "hetero",
            Campaign::Validate => "validate",
        }
    }
}

/// Access scheme as named on the command line and in result rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Random,
    Static,
    Heuristic,
    Mras,
    Qlearn,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Random => "random",
            SchemeKind::Static => "static",
            SchemeKind::Heuristic => "heuristic",
            SchemeKind::Mras => "mras",
            SchemeKind::Qlearn => "qlearn",
        }
    }

    pub fn all() -> Vec<SchemeKind> {
        vec![SchemeKind::Random, SchemeKind::Static, SchemeKind::Heuristic, SchemeKind::Mras, SchemeKind::Qlearn]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Settings of the heterogeneous-channel campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeteroSettings {
    pub layouts: Vec<MixedLayout>,
    /// Slots per replication while scoring candidates.
    pub search_horizon: usize,
    pub search_replications: usize,
    pub mras: MrasConfig,
}

impl Default for HeteroSettings {
    fn default() -> Self {
        Self {
            layouts: vec![MixedLayout::LowRateIdle, MixedLayout::HighRateIdle],
            search_horizon: 3_000,
            search_replications: 4,
            mras: MrasConfig { num_candidates: 100, max_iterations: 60, ..MrasConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub campaign: Option<Campaign>,
    pub m_channels: usize,
    pub n_users: usize,
    pub family: FamilyKind,
    /// Dynamic factors; when absent each campaign uses its own default.
    pub epsilons: Option<Vec<f64>>,
    pub schemes: Option<Vec<SchemeKind>>,
    pub static_p_rec: f64,
    pub seeds: Vec<u64>,
    pub horizon: usize,
    pub buffer_w: usize,
    pub contention: Contention,
    pub mras: MrasConfig,
    pub qlearn: QConfig,
    pub hetero: HeteroSettings,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            campaign: None,
            m_channels: 10,
            n_users: 5,
            family: FamilyKind::Type2,
            epsilons: None,
            schemes: None,
            static_p_rec: 0.7,
            seeds: (0..20).collect(),
            horizon: 2_000,
            buffer_w: 1,
            contention: Contention::Idealized,
            mras: MrasConfig::default(),
            qlearn: QConfig::default(),
            hetero: HeteroSettings::default(),
            out: None,
            format: Format::Csv,
        }
    }
}

/// Dynamic factors swept when none are given.
pub const DEFAULT_EPSILONS: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 8.0, 10.0];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn campaign(&self) -> Campaign {
        self.campaign.unwrap_or(Campaign::Sweep)
    }

    pub fn epsilons(&self) -> Vec<f64> {
        match (&self.epsilons, self.campaign()) {
            (Some(e), _) => e.clone(),
            (None, Campaign::Hetero | Campaign::Simulate) => vec![1.0],
            (None, _) => DEFAULT_EPSILONS.to_vec(),
        }
    }

    pub fn schemes(&self) -> Vec<SchemeKind> {
        match (&self.schemes, self.campaign()) {
            (Some(s), _) => s.clone(),
            (None, Campaign::Simulate) => vec![SchemeKind::Heuristic],
            (None, _) => SchemeKind::all(),
        }
    }

    /// Check every field, naming the offending one.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds: must not be empty");
        }
        if self.m_channels == 0 || self.m_channels > 64 {
            bail!("m_channels: must be in 1..=64, got {}", self.m_channels);
        }
        if self.n_users == 0 || self.n_users > 1024 {
            bail!("n_users: must be in 1..=1024, got {}", self.n_users);
        }
        if self.horizon == 0 {
            bail!("horizon: must be >= 1");
        }
        if self.buffer_w == 0 {
            bail!("buffer_w: must be >= 1");
        }
        if !(self.static_p_rec > 0.0 && self.static_p_rec < 1.0) {
            bail!("static_p_rec: must lie in (0, 1), got {}", self.static_p_rec);
        }
        let eps = self.epsilons();
        if eps.is_empty() {
            bail!("epsilons: must not be empty");
        }
        let max = match self.campaign() {
            // mixed scenarios contain both families
            Campaign::Hetero => FamilyKind::Type1.max_epsilon().min(FamilyKind::Type2.max_epsilon()),
            _ => self.family.max_epsilon(),
        };
        for &e in &eps {
            if !(e > 0.0 && e <= max) {
                bail!("epsilons: {e} outside (0, {max}] for this family");
            }
        }
        if self.schemes().is_empty() {
            bail!("schemes: must not be empty");
        }
        self.mras.validate().context("mras")?;
        self.qlearn.validate().context("qlearn")?;
        self.hetero.mras.validate().context("hetero.mras")?;
        if self.hetero.layouts.is_empty() {
            bail!("hetero.layouts: must not be empty");
        }
        if self.hetero.search_horizon == 0 || self.hetero.search_replications == 0 {
            bail!("hetero.search_horizon and hetero.search_replications: must be >= 1");
        }
        if self.buffer_w > 1 && self.schemes().iter().any(|s| !matches!(s, SchemeKind::Random | SchemeKind::Static)) {
            bail!("buffer_w: values above 1 are supported only for the random and static schemes");
        }
        Ok(())
    }
}
