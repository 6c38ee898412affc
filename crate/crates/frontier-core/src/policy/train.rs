//! Episodic training: rollout, discounted rewards, and gradient ascent.

use super::net::{PolicyNetwork, Trace};
use super::{PolicyError, StateInput};
use crate::cost::{transaction_cost, CostError, CostParams};
use crate::dataset::Dataset;
use crate::portfolio::InvestorPreferences;
use crate::risk::{FactorRiskModel, RiskError};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use std::ops::Range;
use std::sync::Arc;
use thiserror::Error;

/// Smoothing constant for the 3/2-power cost term inside gradients only;
/// reported rewards stay unsmoothed.
const IMPACT_SMOOTHING: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no feasible episode starts in [{lo}, {hi}]")]
    InsufficientHistory { lo: usize, hi: usize },
    #[error("state unavailable at date index {date}")]
    MissingData { date: usize },
    #[error("non-finite update in episode {episode}: {what}")]
    NonFinite { episode: usize, what: &'static str },
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Steps per episode.
    pub episode_length: usize,
    pub learning_rate: f64,
    /// Cap on the global L2 norm of each update.
    pub grad_clip: f64,
    /// Future-reward discount per step.
    pub discount: f64,
    /// Half-width of the uniform parameter initialization.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 5_000,
            episode_length: 30,
            learning_rate: 1e-3,
            grad_clip: 10.0,
            discount: 0.99,
            init_scale: 0.05,
        }
    }
}

/// Realized cost-model inputs for one day.
#[derive(Debug, Clone, Copy)]
pub struct CostInputs<'a> {
    pub sigma: &'a [f64],
    pub volume: &'a [f64],
    pub value: f64,
    pub params: &'a CostParams,
}

/// One-step reward: realized return on the new weights minus scaled
/// transaction-cost and risk penalties.
pub fn immediate_reward(
    returns: &[f64],
    w_next: &[f64],
    w_curr: &[f64],
    risk: &FactorRiskModel,
    costs: CostInputs<'_>,
    prefs: &InvestorPreferences,
) -> Result<f64, TrainError> {
    let trade: Vec<f64> = w_next.iter().zip(w_curr).map(|(a, b)| a - b).collect();
    let phi = transaction_cost(&trade, costs.sigma, costs.volume, costs.value, costs.params)?;
    let psi = risk.portfolio_variance(w_next)?;
    let ret: f64 = returns.iter().zip(w_next).map(|(r, w)| r * w).sum();
    Ok(ret - prefs.gamma_trade * phi - prefs.gamma_risk * psi)
}

/// Discounted future rewards: `G[t] = sum_{k > t} discount^(k-t-1) R[k]`,
/// with `rewards[i]` holding the reward collected at step `i + 1`. The
/// returned vector has one extra trailing entry `G[T] = 0` (empty sum).
pub fn discounted_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    let t = rewards.len();
    let mut g = vec![0.0; t + 1];
    for s in (0..t).rev() {
        g[s] = rewards[s] + discount * g[s + 1];
    }
    g
}

/// Weight of `d reward[k] / d params` in the episode objective
/// `J = mean_t G_t`, namely `sum_{j < k} discount^j / T`.
fn reward_weight(k: usize, discount: f64, t: usize) -> f64 {
    let c = if (discount - 1.0).abs() < 1e-15 {
        k as f64
    } else {
        (1.0 - discount.powi(k as i32)) / (1.0 - discount)
    };
    c / t as f64
}

/// One recorded decision point of an episode.
pub struct EpisodeStep {
    pub state: StateInput,
    /// Realized returns for the day, cash last.
    pub returns: Vec<f64>,
    /// Realized intraday volatility proxies, risky assets only.
    pub sigma: Vec<f64>,
    /// Realized traded volume, risky assets only.
    pub volume: Vec<f64>,
    /// Portfolio value entering the step.
    pub value: f64,
    /// Weights entering the step.
    pub weights_before: Vec<f64>,
    pub risk: Arc<FactorRiskModel>,
}

/// A rolled-out episode with every market quantity frozen, so the policy can
/// be re-evaluated or differentiated on exactly this data.
pub struct FrozenEpisode {
    pub start: usize,
    pub steps: Vec<EpisodeStep>,
}

/// Runs the policy for `length` days starting all-in-cash at date `start`,
/// recording states and realized market data along the way.
pub fn rollout_episode(
    net: &PolicyNetwork,
    data: &Dataset,
    start: usize,
    length: usize,
    params: &CostParams,
) -> Result<FrozenEpisode, TrainError> {
    let n_total = data.n_total();
    let mut weights = vec![0.0; n_total];
    weights[n_total - 1] = 1.0;
    let mut value = 1.0;
    let mut steps = Vec::with_capacity(length);
    let mut trace = Trace::default();
    for t in start..start + length {
        let state = data
            .state_input(t, &weights, net.architecture())
            .ok_or(TrainError::MissingData { date: t })?;
        let returns = data.returns_at(t).ok_or(TrainError::MissingData { date: t })?;
        let risk = data.risk_model(t).ok_or(TrainError::MissingData { date: t })?.clone();
        let sigma = data.realized_sigma(t);
        let volume = data.realized_volume(t);
        net.forward_traced(&state, &mut trace)?;
        let action = trace.output().to_vec();

        steps.push(EpisodeStep {
            state,
            returns: returns.clone(),
            sigma: sigma.clone(),
            volume: volume.clone(),
            value,
            weights_before: weights.clone(),
            risk,
        });

        // Advance the environment: pay the realized (unscaled) cost, earn
        // the day's returns, drift the weights.
        let trade: Vec<f64> = action.iter().zip(&weights).map(|(a, b)| a - b).collect();
        let phi = transaction_cost(&trade, &sigma, &volume, value, params)?;
        let gross: f64 = returns.iter().zip(&action).map(|(r, u)| r * u).sum();
        value *= 1.0 + gross - phi;
        if !(value > 0.0) || !value.is_finite() {
            return Err(TrainError::NonFinite { episode: 0, what: "portfolio value" });
        }
        let mut drifted: Vec<f64> =
            action.iter().zip(&returns).map(|(u, r)| u * (1.0 + r)).collect();
        let total: f64 = drifted.iter().sum();
        for w in &mut drifted {
            *w /= total;
        }
        weights = drifted;
    }
    Ok(FrozenEpisode { start, steps })
}

/// Episode objective `J = mean_t G_t` with actions recomputed by `net` on
/// the frozen states.
pub fn episode_objective(
    net: &PolicyNetwork,
    episode: &FrozenEpisode,
    prefs: &InvestorPreferences,
    params: &CostParams,
    discount: f64,
) -> Result<f64, TrainError> {
    let mut rewards = Vec::with_capacity(episode.steps.len());
    for step in &episode.steps {
        let action = net.forward(&step.state)?;
        let reward = immediate_reward(
            &step.returns,
            &action,
            &step.weights_before,
            &step.risk,
            CostInputs {
                sigma: &step.sigma,
                volume: &step.volume,
                value: step.value,
                params,
            },
            prefs,
        )?;
        rewards.push(reward);
    }
    let g = discounted_returns(&rewards, discount);
    let t = rewards.len();
    Ok(g[..t].iter().sum::<f64>() / t as f64)
}

/// Derivative of the cost penalty with respect to the new weights, with the
/// 3/2-power term smoothed so the derivative exists at zero trade.
fn smoothed_cost_derivative(z: f64, sigma: f64, volume: f64, value: f64, params: &CostParams) -> f64 {
    let mut d = params.c;
    if z != 0.0 {
        d += params.a * z.signum();
    }
    if params.b != 0.0 {
        let scale = (volume / value).sqrt();
        d += 1.5 * params.b * sigma * z / (z * z + IMPACT_SMOOTHING).powf(0.25) / scale;
    }
    d
}

/// Gradient of [`episode_objective`] with respect to the network parameters,
/// holding the recorded states fixed.
pub fn episode_gradient(
    net: &PolicyNetwork,
    episode: &FrozenEpisode,
    prefs: &InvestorPreferences,
    params: &CostParams,
    discount: f64,
) -> Result<Vec<f64>, TrainError> {
    let n_total = net.architecture().n_total();
    let t = episode.steps.len();
    let mut grad = vec![0.0; net.architecture().param_len()];
    let mut trace = Trace::default();
    let mut risk_grad = vec![0.0; n_total];
    for (s, step) in episode.steps.iter().enumerate() {
        net.forward_traced(&step.state, &mut trace)?;
        let action = trace.output().to_vec();
        step.risk.variance_gradient(&action, &mut risk_grad);
        let weight = reward_weight(s + 1, discount, t);
        let d_action: Vec<f64> = (0..n_total)
            .map(|i| {
                let mut d = step.returns[i] - prefs.gamma_risk * risk_grad[i];
                if i + 1 < n_total {
                    let z = action[i] - step.weights_before[i];
                    d -= prefs.gamma_trade
                        * smoothed_cost_derivative(
                            z,
                            step.sigma[i],
                            step.volume[i],
                            step.value,
                            params,
                        );
                }
                weight * d
            })
            .collect();
        net.backward(&step.state, &trace, &d_action, &mut grad);
    }
    Ok(grad)
}

/// Trains `net` by gradient ascent on the mean discounted episode reward.
/// Episode start dates are drawn uniformly from the feasible part of
/// `train_range`; everything is deterministic given `rng`'s state.
pub fn train(
    mut net: PolicyNetwork,
    data: &Dataset,
    train_range: Range<usize>,
    prefs: &InvestorPreferences,
    params: &CostParams,
    cfg: &TrainConfig,
    rng: &mut ChaCha12Rng,
) -> Result<PolicyNetwork, TrainError> {
    let arch = *net.architecture();
    let lookback = if arch.uses_window() { arch.lookback } else { 0 };
    let lo = train_range.start.max(data.first_decidable(lookback, true));
    let horizon = if arch.uses_forecasts() { arch.horizon } else { 1 };
    let hi_date = train_range.end.min(data.last_decidable(horizon) + 1);
    if hi_date < lo + cfg.episode_length {
        return Err(TrainError::InsufficientHistory { lo, hi: hi_date });
    }
    let last_start = hi_date - cfg.episode_length;

    for episode in 0..cfg.episodes {
        let start = rng.gen_range(lo..=last_start);
        let rollout = rollout_episode(&net, data, start, cfg.episode_length, params)
            .map_err(|e| match e {
                TrainError::NonFinite { what, .. } => TrainError::NonFinite { episode, what },
                other => other,
            })?;
        let mut grad = episode_gradient(&net, &rollout, prefs, params, cfg.discount)?;
        let norm2: f64 = grad.iter().map(|g| g * g).sum();
        if !norm2.is_finite() {
            return Err(TrainError::NonFinite { episode, what: "gradient" });
        }
        let norm = norm2.sqrt();
        if norm > cfg.grad_clip {
            let scale = cfg.grad_clip / norm;
            for g in &mut grad {
                *g *= scale;
            }
        }
        for (p, g) in net.params_mut().iter_mut().zip(&grad) {
            *p += cfg.learning_rate * g;
        }
        if net.params().iter().any(|p| !p.is_finite()) {
            return Err(TrainError::NonFinite { episode, what: "parameters" });
        }
    }
    Ok(net)
}
