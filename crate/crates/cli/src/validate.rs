//! Built-in consistency checks between the model, its closed forms and the simulator.

use anyhow::Result;
use specrec_core::channel::{ChannelParams, MatrixFamily};
use specrec_core::mdp::{
    discounted_value_iteration, saturation_row, transition_row_exact, transition_row_mc, transition_row_paper, MdpModel,
    TransitionKernel,
};
use specrec_core::rng_stream;
use specrec_core::sim::{run_simulation, Scheme, SimConfig};
use specrec_core::stats::mean_se;

use crate::campaign::Check;
use crate::config::ExperimentConfig;

/// Largest standardized deviation tolerated by the sampled checks. The
/// samples are seeded, so the outcome is reproducible.
const Z_LIMIT: f64 = 4.5;
const MC_SAMPLES: usize = 200_000;
const ACTIONS: [f64; 3] = [0.1, 0.5, 0.9];

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.to_string(), pass, detail }
}

pub fn all(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let eps = cfg.epsilons()[0];
    let ch = MatrixFamily::new(cfg.family, eps).params()?;
    let model = MdpModel::new(cfg.m_channels, cfg.n_users, ch)?;
    let seed = cfg.seeds[0];
    Ok(vec![
        exact_rows_vs_sampling(&model, seed),
        closed_form_two_users(cfg.m_channels, ch)?,
        users_per_recommended_channel(cfg, ch, seed)?,
        saturation(ch)?,
        monotone_discounted_policies()?,
    ])
}

fn exact_rows_vs_sampling(model: &MdpModel, seed: u64) -> Check {
    let mut worst_sum: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    let mut stream = 0;
    for r in 0..=model.max_state() {
        for &a in &ACTIONS {
            let exact = transition_row_exact(model, r, a).expect("state and action are in range");
            worst_sum = worst_sum.max((exact.iter().sum::<f64>() - 1.0).abs());
            let mc = transition_row_mc(model, r, a, MC_SAMPLES, &mut rng_stream(seed, stream));
            stream += 1;
            for (&e, &m) in exact.iter().zip(&mc) {
                let se = (e * (1.0 - e) / MC_SAMPLES as f64).sqrt();
                let z = if se > 0.0 { (m - e).abs() / se } else if m == e { 0.0 } else { f64::INFINITY };
                worst_z = worst_z.max(z);
            }
        }
    }
    check(
        "transition-rows",
        worst_sum <= 1e-12 && worst_z <= Z_LIMIT,
        format!("max |row sum - 1| = {worst_sum:.1e}, max |z| = {worst_z:.2} over {MC_SAMPLES} samples per row"),
    )
}

fn closed_form_two_users(m: usize, ch: ChannelParams) -> Result<Check> {
    let model = MdpModel::new(m, 2, ch)?;
    let mut worst: f64 = 0.0;
    for r in 0..=model.max_state() {
        for &a in &ACTIONS {
            let x = transition_row_exact(&model, r, a)?;
            let y = transition_row_paper(&model, r, a)?;
            for (u, v) in x.iter().zip(&y) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    Ok(check("closed-form-two-users", worst <= 1e-9, format!("max |closed form - exact| = {worst:.1e} at N=2")))
}

fn users_per_recommended_channel(cfg: &ExperimentConfig, ch: ChannelParams, seed: u64) -> Result<Check> {
    let sim = SimConfig {
        record_trace: true,
        ..SimConfig::homogeneous(cfg.m_channels, cfg.n_users, ch, Scheme::HeuristicAdaptive, 20_000, seed)
    };
    let trace = run_simulation(&sim)?.trace.unwrap_or_default();
    let per: Vec<f64> = trace
        .iter()
        .filter(|s| !s.selection_set.is_empty())
        .map(|s| s.choices.iter().filter(|c| s.selection_set.contains(c)).count() as f64 / s.selection_set.len() as f64)
        .collect();
    if per.len() < 2 {
        return Ok(check("users-per-recommended-channel", false, "too few slots with recommendations".into()));
    }
    let (mean, se) = mean_se(&per);
    let z = if se > 0.0 { (mean - 1.0).abs() / se } else if mean == 1.0 { 0.0 } else { f64::INFINITY };
    Ok(check(
        "users-per-recommended-channel",
        z <= Z_LIMIT,
        format!("{mean:.4} ± {se:.4} over {} slots", per.len()),
    ))
}

fn saturation(ch: ChannelParams) -> Result<Check> {
    let model = MdpModel::new(4, 1024, ch)?;
    let mut worst: f64 = 0.0;
    for r in 0..=4 {
        let limit = saturation_row(4, r, ch.p, ch.q);
        for &a in &ACTIONS {
            let row = transition_row_exact(&model, r, a)?;
            for (u, v) in row.iter().zip(&limit) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    Ok(check("saturation", worst <= 1e-9, format!("M=4, N=1024: max deviation from saturation row {worst:.1e}")))
}

fn monotone_discounted_policies() -> Result<Check> {
    let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let levels = [0.2, 0.5, 0.8];
    let mut bad = Vec::new();
    let mut worst_rcdf = f64::INFINITY;
    for n in 1..=4 {
        for &p in &levels {
            for &q in &levels {
                let kernel = TransitionKernel::infinite_m(n, p, q);
                let sol = discounted_value_iteration(&kernel, 1.0, 0.95, &grid, 100)?;
                if sol.policies.iter().any(|pol| pol.windows(2).any(|w| w[1] < w[0])) {
                    bad.push(format!("N={n} p={p} q={q}"));
                }
                for &a in &grid {
                    let rcdf: Vec<Vec<f64>> = (0..=n)
                        .map(|r| {
                            let row = kernel.row(r, a);
                            (0..=n).map(|k| row[k..].iter().sum()).collect()
                        })
                        .collect();
                    for w in rcdf.windows(2) {
                        for (lo, hi) in w[0].iter().zip(&w[1]) {
                            worst_rcdf = worst_rcdf.min(hi - lo);
                        }
                    }
                }
            }
        }
    }
    Ok(check(
        "monotone-policies",
        bad.is_empty() && worst_rcdf >= -1e-9,
        format!("non-monotone greedy policies: {bad:?}; min reverse-CDF increase in R {worst_rcdf:.1e}"),
    ))
}
