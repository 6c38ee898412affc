//! Training-dynamics properties of the policy-gradient agent.

mod common;

use common::MarketSpec;
use frontier_core::cost::CostParams;
use frontier_core::dataset::{Dataset, DatasetConfig};
use frontier_core::market::ForecastConfig;
use frontier_core::policy::{
    episode_gradient, episode_objective, rollout_episode, train, Architecture, PolicyNetwork,
    PolicyVariant, TrainConfig,
};
use frontier_core::portfolio::InvestorPreferences;
use frontier_core::rng;

fn market(seed: u64) -> Dataset {
    let panel = MarketSpec::new(3, 220, seed).build();
    let mut cfg = DatasetConfig::new(100, ForecastConfig::new(0.02, 0.005, 2).unwrap(), seed);
    cfg.covariance_window = 60;
    Dataset::prepare(panel, cfg).unwrap()
}

#[test]
fn single_ascent_step_improves_frozen_episode_objective() {
    // On a frozen episode the training gradient must be an ascent direction
    // for a small enough step.
    let data = market(41);
    let params = CostParams::new(0.0005, 1.0, 0.0).unwrap();
    let variants =
        [PolicyVariant::LogReturns, PolicyVariant::ForecastOnly, PolicyVariant::AllInputs];
    for trial in 0..20 {
        let variant = variants[trial % 3];
        let arch = Architecture { variant, n_risky: 3, lookback: 12, conv_width: 5, k_maps: 4, horizon: 2 };
        let mut stream = rng::stream(500 + trial as u64, &[1]);
        let net = PolicyNetwork::init_random(arch, 0.05, &mut stream).unwrap();
        let prefs = InvestorPreferences::new(
            [0.0, 5.0, 50.0][trial % 3],
            [0.0, 1.0, 10.0][(trial / 3) % 3],
        )
        .unwrap();
        let episode = rollout_episode(&net, &data, 110 + (trial % 40), 30, &params).unwrap();
        let base = episode_objective(&net, &episode, &prefs, &params, 0.99).unwrap();
        let grad = episode_gradient(&net, &episode, &prefs, &params, 0.99).unwrap();
        let norm2: f64 = grad.iter().map(|g| g * g).sum();
        if norm2 < 1e-18 {
            continue; // flat objective, nothing to check
        }
        // Backtracking: some small step must improve the objective.
        let mut improved = false;
        let mut step = 1e-2;
        for _ in 0..12 {
            let mut moved = net.clone();
            for (p, g) in moved.params_mut().iter_mut().zip(&grad) {
                *p += step * g;
            }
            let value = episode_objective(&moved, &episode, &prefs, &params, 0.99).unwrap();
            if value >= base {
                improved = true;
                break;
            }
            step *= 0.25;
        }
        assert!(improved, "trial {trial}: no ascent step improved the objective");
    }
}

#[test]
fn noiseless_forecast_features_equal_scaled_realized_returns() {
    // With zero forecast noise the shrinkage factor is one, so the
    // forecast-only network sees exactly the realized returns.
    let panel = MarketSpec::new(2, 220, 43).build();
    let mut cfg = DatasetConfig::new(100, ForecastConfig::new(0.0, 0.005, 2).unwrap(), 3);
    cfg.covariance_window = 60;
    let data = Dataset::prepare(panel, cfg).unwrap();
    let arch = Architecture::standard(PolicyVariant::ForecastOnly, 2);
    let w = vec![0.0, 0.0, 1.0];
    for t in 120..160 {
        let state = data.state_input(t, &w, &arch).unwrap();
        let forecasts = state.forecasts.unwrap();
        for (tau, step) in forecasts.iter().enumerate() {
            let realized = data.returns_at(t + tau).unwrap();
            assert_eq!(step[..2], realized[..2], "date {t} step {tau}");
        }
    }
}

#[test]
fn training_is_deterministic_given_seed() {
    let data = market(47);
    let params = CostParams::new(0.0005, 1.0, 0.0).unwrap();
    let prefs = InvestorPreferences::new(1.0, 1.0).unwrap();
    let cfg = TrainConfig { episodes: 30, ..TrainConfig::default() };
    let arch = Architecture { variant: PolicyVariant::LogReturns, n_risky: 3, lookback: 12, conv_width: 5, k_maps: 4, horizon: 2 };
    let run = || {
        let mut stream = rng::stream(9, &[7]);
        let net = PolicyNetwork::init_random(arch, 0.05, &mut stream).unwrap();
        train(net, &data, 100..200, &prefs, &params, &cfg, &mut stream).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.params(), b.params());
}

#[test]
fn zero_episodes_leave_parameters_unchanged() {
    let data = market(53);
    let params = CostParams::zero();
    let cfg = TrainConfig { episodes: 0, ..TrainConfig::default() };
    let arch = Architecture { variant: PolicyVariant::ForecastOnly, n_risky: 3, lookback: 12, conv_width: 5, k_maps: 4, horizon: 2 };
    let mut stream = rng::stream(9, &[8]);
    let net = PolicyNetwork::init_random(arch, 0.05, &mut stream).unwrap();
    let before = net.params().to_vec();
    let trained = train(
        net,
        &data,
        100..200,
        &InvestorPreferences::neutral(),
        &params,
        &cfg,
        &mut stream,
    )
    .unwrap();
    assert_eq!(trained.params(), &before[..]);
}
