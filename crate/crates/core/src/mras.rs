//! Model reference adaptive search over stationary policies.
//!
//! Each iteration draws `L` candidates from independent Gaussians (one per
//! decision variable), scores them, raises the elite threshold to the
//! `⌈(1−ρ)L⌉`-th order statistic (never below its previous value), and refits
//! the Gaussians to the elites with weights `exp((k−1) Φ_i)`. Infeasible
//! candidates score `-inf` and never become elites. The search stops once
//! every standard deviation is below `ξ`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{clamp_action, MdpModel, Policy, PolicyEvaluator};

/// Floor applied to refitted standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Independent Gaussian sampling law over the decision variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicyModel {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GaussianPolicyModel {
    pub fn uniform(dim: usize, mu: f64, sigma: f64) -> Self {
        Self { mu: vec![mu; dim], sigma: vec![sigma; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MrasConfig {
    /// Candidates per iteration, `L`.
    pub num_candidates: usize,
    /// Elite ratio `ρ`.
    pub elite_ratio: f64,
    /// Stop once every σ is below this, `ξ`.
    pub stop_sigma: f64,
    pub max_iterations: usize,
    pub mu_init: f64,
    pub sigma_init: f64,
    /// Fresh batches drawn when a batch contains no feasible candidate.
    #[serde(default = "default_resamples")]
    pub max_resamples: usize,
}

fn default_resamples() -> usize {
    5
}

impl Default for MrasConfig {
    fn default() -> Self {
        Self {
            num_candidates: 500,
            elite_ratio: 0.1,
            stop_sigma: 1e-3,
            max_iterations: 1000,
            mu_init: 0.5,
            sigma_init: 0.5,
            max_resamples: default_resamples(),
        }
    }
}

impl MrasConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_candidates < 2 {
            return Err(Error::Config("MRAS needs at least 2 candidates per iteration".into()));
        }
        if !(self.elite_ratio > 0.0 && self.elite_ratio < 1.0) {
            return Err(Error::Config(format!("elite ratio {} must lie in (0, 1)", self.elite_ratio)));
        }
        if !(self.stop_sigma > 0.0) || !(self.sigma_init > 0.0) {
            return Err(Error::Config("stop_sigma and sigma_init must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// One iteration of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gamma: f64,
    pub best_phi: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub feasible_count: usize,
    pub elite_count: usize,
}

impl IterationRecord {
    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MrasTrace {
    pub records: Vec<IterationRecord>,
}

impl MrasTrace {
    /// CSV with header `iteration,gamma,best_phi,max_sigma,feasible_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,gamma,best_phi,max_sigma,feasible_count\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration,
                r.gamma,
                r.best_phi,
                r.max_sigma(),
                r.feasible_count
            ));
        }
        out
    }
}

/// Result of a search.
#[derive(Debug, Clone)]
pub struct MrasOutcome {
    /// Returned decision vector (final means clamped into the interior, or
    /// the best candidate seen when that scores higher on a non-converged run).
    pub params: Vec<f64>,
    pub phi: f64,
    pub converged: bool,
    pub trace: MrasTrace,
}

/// Draw `l` candidates; component `R` of each is `Normal(mu_R, sigma_R²)`.
pub fn sample_policies<R: Rng + ?Sized>(gm: &GaussianPolicyModel, l: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..l)
        .map(|_| {
            gm.mu
                .iter()
                .zip(&gm.sigma)
                .map(|(&mu, &sigma)| {
                    let z: f64 = rng.sample(StandardNormal);
                    mu + sigma * z
                })
                .collect()
        })
        .collect()
}

/// 1-based rank `⌈(1−ρ)L⌉` of the elite threshold in ascending order.
pub fn elite_index(l: usize, rho: f64) -> usize {
    // The small offset keeps exact products such as 0.6 * 100 from rounding up.
    let idx = ((1.0 - rho) * l as f64 - 1e-9).ceil() as usize;
    idx.clamp(1, l)
}

/// `γ_k = max(scores[⌈(1−ρ)L⌉], γ_{k−1})` over ascending `sorted_scores`.
pub fn elite_threshold(sorted_scores: &[f64], rho: f64, gamma_prev: f64) -> Result<f64> {
    if sorted_scores.iter().all(|s| *s == f64::NEG_INFINITY) {
        return Err(Error::NoFeasibleCandidate);
    }
    debug_assert!(sorted_scores.windows(2).all(|w| w[0] <= w[1]), "scores must be ascending");
    let q = sorted_scores[elite_index(sorted_scores.len(), rho) - 1];
    Ok(q.max(gamma_prev))
}

/// Weighted refit with weights `exp((k−1) Φ_i)`, computed relative to the
/// largest exponent.
pub fn update_params(elites: &[(&[f64], f64)], k: usize) -> GaussianPolicyModel {
    assert!(!elites.is_empty(), "update needs at least one elite");
    let tilt = k.saturating_sub(1) as f64;
    let top = elites.iter().map(|(_, phi)| tilt * phi).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = elites.iter().map(|(_, phi)| (tilt * phi - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let dim = elites[0].0.len();
    let mut mu = vec![0.0; dim];
    for ((x, _), w) in elites.iter().zip(&weights) {
        for (m, v) in mu.iter_mut().zip(x.iter()) {
            *m += w * v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= total);
    let mut var = vec![0.0; dim];
    for ((x, _), w) in elites.iter().zip(&weights) {
        for ((s, v), m) in var.iter_mut().zip(x.iter()).zip(&mu) {
            *s += w * (v - m).powi(2);
        }
    }
    let sigma = var.iter().map(|v| (v / total).sqrt().max(SIGMA_FLOOR)).collect();
    GaussianPolicyModel { mu, sigma }
}

/// Maximize `objective` over `dim` variables. Candidates are scored in
/// parallel; everything else, including the random stream, is sequential so
/// runs are reproducible.
pub fn optimize<R, F>(dim: usize, cfg: &MrasConfig, objective: F, rng: &mut R) -> Result<MrasOutcome>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    optimize_projected(dim, cfg, |_| {}, objective, rng)
}

/// Like [`optimize`], but every sampled candidate is first mapped by
/// `project`; the projected point is what gets scored and refitted.
pub fn optimize_projected<R, P, F>(dim: usize, cfg: &MrasConfig, project: P, objective: F, rng: &mut R) -> Result<MrasOutcome>
where
    R: Rng + ?Sized,
    P: Fn(&mut [f64]),
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let mut gm = GaussianPolicyModel::uniform(dim, cfg.mu_init, cfg.sigma_init);
    let mut gamma = 0.0f64;
    let mut trace = MrasTrace::default();
    let mut best_seen: Option<(Vec<f64>, f64)> = None;
    let mut converged = false;

    for k in 1..=cfg.max_iterations {
        let mut attempt = 0;
        let (candidates, scores) = loop {
            let mut candidates = sample_policies(&gm, cfg.num_candidates, rng);
            candidates.iter_mut().for_each(|c| project(c));
            let scores: Vec<f64> = candidates.par_iter().map(|c| objective(c)).collect();
            if scores.iter().any(|s| s.is_finite()) {
                break (candidates, scores);
            }
            attempt += 1;
            if attempt > cfg.max_resamples {
                return Err(Error::NoFeasibleCandidate);
            }
        };

        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        gamma = elite_threshold(&sorted, cfg.elite_ratio, gamma)?;

        let (best_i, best_phi) = scores
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
        if best_seen.as_ref().is_none_or(|(_, b)| best_phi > *b) {
            best_seen = Some((candidates[best_i].clone(), best_phi));
        }

        let elites: Vec<(&[f64], f64)> = candidates
            .iter()
            .zip(&scores)
            .filter(|(_, &s)| s.is_finite() && s >= gamma)
            .map(|(c, &s)| (c.as_slice(), s))
            .collect();
        // With a threshold carried over from an earlier batch the elite set
        // can be empty; the sampling law is then left unchanged.
        if !elites.is_empty() {
            gm = update_params(&elites, k);
        }
        trace.records.push(IterationRecord {
            iteration: k,
            gamma,
            best_phi,
            mu: gm.mu.clone(),
            sigma: gm.sigma.clone(),
            feasible_count: scores.iter().filter(|s| s.is_finite()).count(),
            elite_count: elites.len(),
        });
        if gm.max_sigma() < cfg.stop_sigma {
            converged = true;
            break;
        }
    }

    let mut clamped: Vec<f64> = gm.mu.iter().map(|&m| clamp_action(m)).collect();
    project(&mut clamped);
    let phi = objective(&clamped);
    let (params, phi) = match best_seen {
        Some((x, b)) if !converged && b > phi => (x, b),
        _ => (clamped, phi),
    };
    Ok(MrasOutcome { params, phi, converged, trace })
}

/// Solution of the homogeneous MDP.
#[derive(Debug, Clone)]
pub struct MrasSolution {
    pub policy: Policy,
    pub phi: f64,
    pub converged: bool,
    pub trace: MrasTrace,
}

/// Search for the throughput-optimal stationary policy of `model`.
pub fn solve<R: Rng + ?Sized>(model: &MdpModel, cfg: &MrasConfig, rng: &mut R) -> Result<MrasSolution> {
    let evaluator = PolicyEvaluator::new(model);
    let out = optimize(model.num_states(), cfg, |x| evaluator.throughput(x), rng)?;
    Ok(MrasSolution { policy: Policy::new(out.params)?, phi: out.phi, converged: out.converged, trace: out.trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub final_max_sigma: f64,
    pub iterations: usize,
    pub phi: f64,
    pub best_phi_series: Vec<f64>,
}

/// Summarize a trace. `phi` is the score of the returned policy.
pub fn convergence_report(trace: &MrasTrace, xi: f64, phi: f64) -> ConvergenceReport {
    let last = trace.records.last().expect("trace must be nonempty");
    ConvergenceReport {
        converged: last.max_sigma() < xi,
        final_max_sigma: last.max_sigma(),
        iterations: trace.records.len(),
        phi,
        best_phi_series: trace.records.iter().map(|r| r.best_phi).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::rng_stream;

    #[test]
    fn zero_sigma_reproduces_mean() {
        let gm = GaussianPolicyModel { mu: vec![0.3, 0.7], sigma: vec![0.0, 0.0] };
        let mut rng = rng_stream(1, 0);
        for c in sample_policies(&gm, 20, &mut rng) {
            assert_eq!(c, vec![0.3, 0.7]);
        }
    }

    #[test]
    fn feasible_fraction_matches_gaussian_mass() {
        let gm = GaussianPolicyModel::uniform(1, 0.5, 0.5);
        let mut rng = rng_stream(2, 0);
        let n = 100_000;
        let inside = sample_policies(&gm, n, &mut rng).iter().filter(|c| c[0] > 0.0 && c[0] < 1.0).count();
        let frac = inside as f64 / n as f64;
        // P(|Z| < 1)
        assert!((frac - 0.682_689_492).abs() < 0.01, "frac {frac}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let gm = GaussianPolicyModel::uniform(3, 0.5, 0.2);
        let a = sample_policies(&gm, 5, &mut rng_stream(9, 1));
        let b = sample_policies(&gm, 5, &mut rng_stream(9, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn elite_index_examples() {
        assert_eq!(elite_index(100, 0.4), 60);
        assert_eq!(elite_index(5, 0.2), 4);
        assert_eq!(elite_index(500, 0.1), 450);
        assert_eq!(elite_index(100, 0.1), 90);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(elite_threshold(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.2, 0.0).unwrap(), 4.0);
        assert_eq!(elite_threshold(&[1.0, 2.0, 3.0], 0.5, 10.0).unwrap(), 10.0);
        assert!(matches!(
            elite_threshold(&[f64::NEG_INFINITY; 4], 0.5, 0.0),
            Err(Error::NoFeasibleCandidate)
        ));
        // infeasible order statistics fall back to the previous threshold
        assert_eq!(elite_threshold(&[f64::NEG_INFINITY, f64::NEG_INFINITY, 0.5], 0.5, 0.1).unwrap(), 0.1);
    }

    #[test]
    fn first_iteration_weights_are_uniform() {
        let a = [0.2, 0.4];
        let b = [0.6, 0.8];
        let gm = update_params(&[(&a, 3.0), (&b, 1.0)], 1);
        assert!((gm.mu[0] - 0.4).abs() < 1e-15 && (gm.mu[1] - 0.6).abs() < 1e-15);
        assert!((gm.sigma[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_elite_collapses() {
        let a = [0.25, 0.75];
        let gm = update_params(&[(&a, 2.0)], 7);
        assert_eq!(gm.mu, vec![0.25, 0.75]);
        assert_eq!(gm.sigma, vec![SIGMA_FLOOR; 2]);
    }

    #[test]
    fn tilted_weights_hand_example() {
        let a = [0.9];
        let b = [0.3];
        let gm = update_params(&[(&a, 2f64.ln()), (&b, 0.0)], 2);
        let mu = (2.0 * 0.9 + 0.3) / 3.0;
        assert!((gm.mu[0] - mu).abs() < 1e-14);
        let var = (2.0 * (0.9f64 - mu).powi(2) + (0.3f64 - mu).powi(2)) / 3.0;
        assert!((gm.sigma[0] - var.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn huge_tilt_does_not_overflow() {
        let a = [0.1];
        let b = [0.2];
        let gm = update_params(&[(&a, 800.0), (&b, 799.0)], 50);
        assert!(gm.mu[0].is_finite() && (gm.mu[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_header() {
        let trace = MrasTrace {
            records: vec![IterationRecord {
                iteration: 1,
                gamma: 0.5,
                best_phi: 1.0,
                mu: vec![0.5],
                sigma: vec![0.25, 0.5],
                feasible_count: 3,
                elite_count: 1,
            }],
        };
        assert_eq!(trace.to_csv(), "iteration,gamma,best_phi,max_sigma,feasible_count\n1,0.5,1,0.5,3\n");
    }

    #[test]
    fn solve_small_model_tracks_threshold_and_converges() {
        let md = MdpModel::new(3, 2, ChannelParams::new(0.1, 0.1, 1.0).unwrap()).unwrap();
        let cfg = MrasConfig { num_candidates: 200, ..MrasConfig::default() };
        let sol = solve(&md, &cfg, &mut rng_stream(3, 0)).unwrap();
        assert!(sol.converged);
        let g: Vec<f64> = sol.trace.records.iter().map(|r| r.gamma).collect();
        assert!(g.windows(2).all(|w| w[1] >= w[0]));
        assert!(sol.phi >= sol.trace.records[0].best_phi);
        let rep = convergence_report(&sol.trace, cfg.stop_sigma, sol.phi);
        assert!(rep.converged && rep.final_max_sigma < cfg.stop_sigma);
        assert_eq!(rep.iterations, sol.trace.records.len());
    }

    #[test]
    fn non_converged_run_is_flagged() {
        let md = MdpModel::new(3, 2, ChannelParams::new(0.1, 0.1, 1.0).unwrap()).unwrap();
        let cfg = MrasConfig { num_candidates: 50, max_iterations: 2, ..MrasConfig::default() };
        let sol = solve(&md, &cfg, &mut rng_stream(3, 0)).unwrap();
        assert!(!sol.converged);
        let rep = convergence_report(&sol.trace, cfg.stop_sigma, sol.phi);
        assert!(!rep.converged && rep.final_max_sigma >= cfg.stop_sigma);
    }

    #[test]
    fn config_validation() {
        assert!(MrasConfig { num_candidates: 1, ..MrasConfig::default() }.validate().is_err());
        assert!(MrasConfig { elite_ratio: 1.0, ..MrasConfig::default() }.validate().is_err());
        assert!(MrasConfig::default().validate().is_ok());
    }
}
