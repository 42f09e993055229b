use specrec_core::channel::ChannelParams;
use specrec_core::hetero::{mixed_rate_channels, HeteroModel, HeteroPolicyFile, HeteroWeightPolicy, MixedLayout};
use specrec_core::mdp::{policy_throughput, MdpModel, Policy, PolicyFile, TransitionFormula, ZeroStateSemantics};
use specrec_core::mras::{solve, MrasConfig};
use specrec_core::rng_stream;
use specrec_core::sim::{run_simulation, Scheme, SimConfig};
use specrec_core::stats::mean_se;

/// Memoryless channels (`p + q = 1`) make the stationary treatment of
/// unrecommended channels exact, so the simulator must agree with the chain.
fn simulated_vs_exact(policy: Policy, model: &MdpModel) {
    let exact = policy_throughput(model, &policy, TransitionFormula::Exact).unwrap();
    let runs: Vec<f64> = (0..12)
        .map(|seed| {
            let cfg = SimConfig::homogeneous(
                model.m_channels,
                model.n_users,
                model.channel,
                Scheme::PolicyDriven(policy.clone()),
                20_000,
                seed,
            );
            run_simulation(&cfg).unwrap().average_throughput
        })
        .collect();
    let (mean, se) = mean_se(&runs);
    assert!((mean - exact).abs() <= 4.0 * se, "simulated {mean} ± {se}, exact {exact}");
}

fn iid_model() -> MdpModel {
    let ch = ChannelParams::new(0.3, 0.7, 2.0).unwrap();
    MdpModel::new(6, 3, ch).unwrap().with_zero_state(ZeroStateSemantics::RandomAccess)
}

#[test]
fn heuristic_policy_throughput_matches_simulation_for_memoryless_channels() {
    let model = iid_model();
    simulated_vs_exact(Policy::heuristic(&model), &model);
}

#[test]
fn arbitrary_policy_throughput_matches_simulation_for_memoryless_channels() {
    let model = iid_model();
    simulated_vs_exact(Policy::new(vec![0.5, 0.9, 0.2, 0.6]).unwrap(), &model);
}

#[test]
fn searched_policy_survives_a_file_round_trip() {
    let model = MdpModel::new(5, 4, ChannelParams::new(0.02, 0.02, 1.0).unwrap()).unwrap();
    let cfg = MrasConfig { num_candidates: 80, ..MrasConfig::default() };
    let sol = solve(&model, &cfg, &mut rng_stream(5, 0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    std::fs::write(&path, PolicyFile::new(&model, &sol.policy).to_json()).unwrap();
    let file = PolicyFile::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file.model().unwrap(), model);
    let back = file.policy().unwrap();
    assert_eq!(back, sol.policy);
    assert_eq!(policy_throughput(&model, &back, TransitionFormula::Exact).unwrap(), sol.phi);
}

#[test]
fn hetero_policy_file_round_trip() {
    let model = HeteroModel::new(mixed_rate_channels(MixedLayout::HighRateIdle, 2.0).unwrap(), 5).unwrap();
    let w: Vec<f64> = (0..10).map(|i| 0.05 + 0.09 * i as f64).collect();
    let policy = HeteroWeightPolicy::new(w.clone(), w.iter().rev().copied().collect()).unwrap();
    let file = HeteroPolicyFile::new(&model, &policy);
    let back = HeteroPolicyFile::from_json(&file.to_json()).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.policy().unwrap(), policy);
    assert_eq!(back.model().unwrap().channels, model.channels);
}
