//! Campaign dispatch: turns a configuration into result rows.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use specrec_core::channel::{ChannelParams, FamilyKind, MatrixFamily};
use specrec_core::hetero::{
    best_static, evaluate_scheme_reps, mixed_rate_channels, mras_solve_hetero, HeteroEval, HeteroModel,
    HeteroPolicyFile,
};
use specrec_core::mdp::{relative_value_iteration, MdpModel, Policy, PolicyEvaluator, PolicyFile};
use specrec_core::mras::solve;
use specrec_core::qlearn::train;
use specrec_core::sim::{run_simulation, trace_to_csv, Scheme, SimConfig};
use specrec_core::{derive_seed, rng_stream};

use crate::config::{Campaign, ExperimentConfig, SchemeKind};
use crate::output::{sort_rows, ResultRow};

/// Salt separating the policy-search stream from simulation seeds.
const MRAS_SALT: u64 = 0x6d72_6173;
const QLEARN_SALT: u64 = 0x716c_726e;
const HETERO_SALT: u64 = 0x6874_7267;

/// Options that only some campaigns use.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Per-slot CSV of the first simulated run.
    pub trace_out: Option<PathBuf>,
}

fn channel(cfg: &ExperimentConfig, eps: f64) -> Result<ChannelParams> {
    MatrixFamily::new(cfg.family, eps).params().with_context(|| format!("epsilons: {eps}"))
}

fn model(cfg: &ExperimentConfig, eps: f64) -> Result<MdpModel> {
    Ok(MdpModel::new(cfg.m_channels, cfg.n_users, channel(cfg, eps)?)?)
}

fn base_row(cfg: &ExperimentConfig, scheme: &str, family: &str, eps: f64, seed: u64, horizon: usize, throughput: f64) -> ResultRow {
    ResultRow {
        campaign: cfg.campaign().name().to_string(),
        scheme: scheme.to_string(),
        family: family.to_string(),
        epsilon: eps,
        seed,
        horizon,
        throughput,
        extra: Default::default(),
    }
}

fn policy_string(p: &[f64]) -> String {
    serde_json::to_string(p).expect("floats serialize")
}

/// Directory next to the result file where policies are cached.
fn cache_dir(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.out.as_ref().map(|o| o.parent().map(Path::to_path_buf).unwrap_or_default())
}

fn mras_cache_path(dir: &Path, family: FamilyKind, eps: f64) -> PathBuf {
    dir.join(format!("mras_policy_{family}_eps{eps}.json"))
}

/// MRAS policy for `(family, eps)`, read from the cache when present and
/// written to it otherwise.
fn mras_policy(cfg: &ExperimentConfig, eps: f64) -> Result<Policy> {
    let md = model(cfg, eps)?;
    let cached = cache_dir(cfg).map(|d| mras_cache_path(&d, cfg.family, eps));
    if let Some(path) = &cached {
        if let Ok(text) = std::fs::read_to_string(path) {
            let file = PolicyFile::from_json(&text)?;
            if file.model()? == md {
                return Ok(file.policy()?);
            }
        }
    }
    let seed = derive_seed(cfg.seeds[0] ^ MRAS_SALT, eps.to_bits());
    let sol = solve(&md, &cfg.mras, &mut rng_stream(seed, 0))?;
    if let Some(path) = &cached {
        std::fs::write(path, PolicyFile::new(&md, &sol.policy).to_json())
            .with_context(|| format!("writing policy cache {}", path.display()))?;
    }
    Ok(sol.policy)
}

fn q_policy(cfg: &ExperimentConfig, eps: f64) -> Result<Policy> {
    let md = model(cfg, eps)?;
    let seed = derive_seed(cfg.seeds[0] ^ QLEARN_SALT, eps.to_bits());
    Ok(train(&md, &cfg.qlearn, &mut rng_stream(seed, 0))?.interior_policy())
}

pub fn run_campaign(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if let Some(dir) = cache_dir(cfg).filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut rows = match cfg.campaign() {
        Campaign::SolveMdp => solve_mdp(cfg)?,
        Campaign::TrainQ => train_q(cfg)?,
        Campaign::Simulate | Campaign::Sweep => simulate(cfg, opts)?,
        Campaign::Hetero => hetero(cfg)?,
        Campaign::Validate => anyhow::bail!("validate produces a report, not result rows"),
    };
    sort_rows(&mut rows);
    Ok(rows)
}

fn solve_mdp(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let jobs: Vec<(f64, u64)> = cfg.epsilons().into_iter().flat_map(|e| cfg.seeds.iter().map(move |&s| (e, s))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(eps, seed)| -> Result<ResultRow> {
            let md = model(cfg, eps)?;
            let sol = solve(&md, &cfg.mras, &mut rng_stream(derive_seed(seed ^ MRAS_SALT, eps.to_bits()), 0))?;
            let dp = relative_value_iteration(&md, &grid, 1e-10, 1_000_000)?;
            Ok(base_row(cfg, "mras", cfg.family.name(), eps, seed, 0, sol.phi)
                .with("iterations", sol.trace.records.len())
                .with("converged", sol.converged)
                .with("grid_optimum", dp.gain)
                .with("policy", policy_string(sol.policy.as_slice())))
        })
        .collect::<Result<Vec<_>>>()?;
    // cache the first seed's policy per epsilon for later sweeps
    if let Some(dir) = cache_dir(cfg) {
        for eps in cfg.epsilons() {
            let path = mras_cache_path(&dir, cfg.family, eps);
            if !path.exists() {
                mras_policy(cfg, eps)?;
            }
        }
    }
    Ok(rows)
}

fn train_q(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let jobs: Vec<(f64, u64)> = cfg.epsilons().into_iter().flat_map(|e| cfg.seeds.iter().map(move |&s| (e, s))).collect();
    jobs.par_iter()
        .map(|&(eps, seed)| -> Result<ResultRow> {
            let md = model(cfg, eps)?;
            let out = train(&md, &cfg.qlearn, &mut rng_stream(derive_seed(seed ^ QLEARN_SALT, eps.to_bits()), 0))?;
            let policy = out.interior_policy();
            let phi = PolicyEvaluator::new(&md).throughput(policy.as_slice());
            if let Some(dir) = cache_dir(cfg) {
                let path = dir.join(format!("qtable_{}_eps{eps}_seed{seed}.csv", cfg.family));
                std::fs::write(&path, out.table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(base_row(cfg, "qlearn", cfg.family.name(), eps, seed, 0, phi)
                .with("policy", policy_string(out.policy.as_slice()))
                .with("steps", cfg.qlearn.steps)
                .with("discount", cfg.qlearn.discount))
        })
        .collect()
}

fn scheme_for(cfg: &ExperimentConfig, kind: SchemeKind, eps: f64) -> Result<Scheme> {
    Ok(match kind {
        SchemeKind::Random => Scheme::Random,
        SchemeKind::Static => Scheme::Static { p_rec: cfg.static_p_rec },
        SchemeKind::Heuristic => Scheme::HeuristicAdaptive,
        SchemeKind::Mras => Scheme::PolicyDriven(mras_policy(cfg, eps)?),
        SchemeKind::Qlearn => Scheme::PolicyDriven(q_policy(cfg, eps)?),
    })
}

fn simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    let eps_list = cfg.epsilons();
    let kinds = cfg.schemes();
    // policies are computed once per (scheme, epsilon), before the seed fan-out
    let mut schemes = Vec::new();
    for &kind in &kinds {
        for &eps in &eps_list {
            schemes.push((kind, eps, scheme_for(cfg, kind, eps)?));
        }
    }
    let jobs: Vec<(usize, u64)> = (0..schemes.len()).flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s))).collect();
    let sim_cfg = |i: usize, seed: u64| -> Result<SimConfig> {
        let (_, eps, scheme) = &schemes[i];
        Ok(SimConfig {
            buffer_w: cfg.buffer_w,
            contention: cfg.contention,
            ..SimConfig::homogeneous(cfg.m_channels, cfg.n_users, channel(cfg, *eps)?, scheme.clone(), cfg.horizon, seed)
        })
    };
    let rows = jobs
        .par_iter()
        .map(|&(i, seed)| -> Result<ResultRow> {
            let (kind, eps, scheme) = &schemes[i];
            let res = run_simulation(&sim_cfg(i, seed)?)?;
            let mut row = base_row(cfg, kind.name(), cfg.family.name(), *eps, seed, cfg.horizon, res.average_throughput);
            match scheme {
                Scheme::Static { p_rec } => row = row.with("p_rec", p_rec),
                Scheme::PolicyDriven(p) => row = row.with("policy", policy_string(p.as_slice())),
                _ => {}
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    if let (Some(path), Some(&(i, seed))) = (&opts.trace_out, jobs.first()) {
        let mut c = sim_cfg(i, seed)?;
        c.record_trace = true;
        let trace = run_simulation(&c)?.trace.unwrap_or_default();
        std::fs::write(path, trace_to_csv(&trace)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(rows)
}

fn hetero(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let statics: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
    let mut rows = Vec::new();
    for &layout in &cfg.hetero.layouts {
        for eps in cfg.epsilons() {
            let hm = HeteroModel::new(mixed_rate_channels(layout, eps)?, cfg.n_users)?;
            let search = HeteroEval {
                horizon: cfg.hetero.search_horizon,
                replications: cfg.hetero.search_replications,
                base_seed: derive_seed(cfg.seeds[0] ^ HETERO_SALT, eps.to_bits()),
            };
            let sol = mras_solve_hetero(&hm, &cfg.hetero.mras, &search, &mut rng_stream(search.base_seed, 1))?;
            let (best_p, _, _) = best_static(&hm, &statics, &search)?;
            if let Some(dir) = cache_dir(cfg) {
                let path = dir.join(format!("hetero_policy_{}_eps{eps}.json", layout.name()));
                std::fs::write(&path, HeteroPolicyFile::new(&hm, &sol.policy).to_json())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let schemes = [
                ("hetero", Scheme::HeteroWeights(sol.policy.clone())),
                ("static", Scheme::Static { p_rec: best_p }),
                ("random", Scheme::Random),
            ];
            let batch = cfg
                .seeds
                .par_iter()
                .flat_map_iter(|&seed| schemes.iter().map(move |s| (seed, s)))
                .map(|(seed, (name, scheme))| -> Result<ResultRow> {
                    let eval = HeteroEval { horizon: cfg.horizon, replications: 1, base_seed: seed };
                    let u = evaluate_scheme_reps(&hm, scheme, &eval)?[0];
                    let row = base_row(cfg, name, layout.name(), eps, seed, cfg.horizon, u);
                    Ok(if *name == "static" { row.with("p_rec", best_p) } else { row })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.extend(batch);
        }
    }
    Ok(rows)
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Run the built-in consistency checks.
pub fn run_validation(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    crate::validate::all(cfg)
}
