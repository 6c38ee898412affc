//! Single- and multi-period mean-variance programs and the projected
//! gradient solver that maximizes them.
//!
//! Both programs choose trades that maximize forecast return minus scaled
//! transaction-cost and risk penalties, subject to long-only, fully-invested,
//! self-financing constraints. The solver works on the post-trade weights
//! directly, so every iterate is feasible by construction: each period's
//! weight vector lives on the probability simplex and the implied trades sum
//! to zero.

mod simplex;
mod solver;

pub use simplex::project_to_simplex;
pub use solver::{solve, DEFAULT_MAX_ITER, DEFAULT_TOL};

use crate::cost::{cost_unchecked, CostParams};
use crate::portfolio::{InvestorPreferences, PortfolioState};
use crate::risk::FactorRiskModel;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("constraint set must enable long-only, fully-invested, and self-financing")]
    UnsupportedConstraints,
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("horizon must be >= 1 and match the number of forecasts (got {forecasts} forecasts for H={horizon})")]
    BadHorizon { horizon: usize, forecasts: usize },
    #[error("estimated volume must be positive when the impact term is active (asset {0})")]
    NonPositiveVolume(usize),
    #[error("portfolio value must be positive (got {0})")]
    NonPositiveValue(f64),
}

/// Feasible-set flags. The solver supports exactly the default profile; the
/// flags exist so callers state their assumptions explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintSet {
    pub long_only: bool,
    pub fully_invested: bool,
    pub self_financing: bool,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self { long_only: true, fully_invested: true, self_financing: true }
    }
}

impl ConstraintSet {
    fn supported(&self) -> bool {
        self.long_only && self.fully_invested && self.self_financing
    }
}

/// Estimated per-asset cost inputs (trailing-mean volatility and volume) used
/// inside the objective.
#[derive(Debug, Clone)]
pub struct CostEstimates {
    pub sigma: Vec<f64>,
    pub volume: Vec<f64>,
}

/// A built optimization problem over `horizon` trade vectors.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    forecasts: Vec<Vec<f64>>,
    start_weights: Vec<f64>,
    value: f64,
    risk: Arc<FactorRiskModel>,
    cost: CostEstimates,
    params: CostParams,
    prefs: InvestorPreferences,
}

/// Solver output: the planned trades and diagnostics.
#[derive(Debug, Clone)]
pub struct TradePlan {
    /// One trade vector per period; only the first is executed.
    pub trades: Vec<Vec<f64>>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl TradePlan {
    /// Post-trade weight path implied by the trades.
    pub fn weights_path(&self, start: &[f64]) -> Vec<Vec<f64>> {
        let mut path = Vec::with_capacity(self.trades.len());
        let mut current = start.to_vec();
        for trade in &self.trades {
            for (w, z) in current.iter_mut().zip(trade) {
                *w += z;
            }
            path.push(current.clone());
        }
        path
    }

    /// The trade executed now.
    pub fn first_trade(&self) -> &[f64] {
        &self.trades[0]
    }
}

/// Builds the single-period program.
pub fn build_spo(
    forecast: &[f64],
    state: &PortfolioState,
    risk: Arc<FactorRiskModel>,
    cost: CostEstimates,
    params: CostParams,
    prefs: InvestorPreferences,
    constraints: &ConstraintSet,
) -> Result<ProblemInstance, OptimizerError> {
    build_mpo(std::slice::from_ref(&forecast.to_vec()), state, risk, cost, params, prefs, constraints, 1)
}

/// Builds the multi-period program over `horizon` steps with weight
/// recursion between periods.
#[allow(clippy::too_many_arguments)]
pub fn build_mpo(
    forecasts: &[Vec<f64>],
    state: &PortfolioState,
    risk: Arc<FactorRiskModel>,
    cost: CostEstimates,
    params: CostParams,
    prefs: InvestorPreferences,
    constraints: &ConstraintSet,
    horizon: usize,
) -> Result<ProblemInstance, OptimizerError> {
    if !constraints.supported() {
        return Err(OptimizerError::UnsupportedConstraints);
    }
    if horizon == 0 || forecasts.len() != horizon {
        return Err(OptimizerError::BadHorizon { horizon, forecasts: forecasts.len() });
    }
    let dim = state.n_total();
    if risk.dim() != dim {
        return Err(OptimizerError::DimensionMismatch { expected: dim, actual: risk.dim() });
    }
    for forecast in forecasts {
        if forecast.len() != dim {
            return Err(OptimizerError::DimensionMismatch {
                expected: dim,
                actual: forecast.len(),
            });
        }
        if forecast.iter().any(|v| !v.is_finite()) {
            return Err(OptimizerError::NonFinite("forecast"));
        }
    }
    let n_risky = dim - 1;
    if cost.sigma.len() != n_risky {
        return Err(OptimizerError::DimensionMismatch { expected: n_risky, actual: cost.sigma.len() });
    }
    if cost.volume.len() != n_risky {
        return Err(OptimizerError::DimensionMismatch {
            expected: n_risky,
            actual: cost.volume.len(),
        });
    }
    if cost.sigma.iter().chain(cost.volume.iter()).any(|v| !v.is_finite()) {
        return Err(OptimizerError::NonFinite("cost estimates"));
    }
    if !(state.value() > 0.0) {
        return Err(OptimizerError::NonPositiveValue(state.value()));
    }
    if params.b > 0.0 {
        if let Some(i) = cost.volume.iter().position(|&v| v <= 0.0) {
            return Err(OptimizerError::NonPositiveVolume(i));
        }
    }
    Ok(ProblemInstance {
        forecasts: forecasts.to_vec(),
        start_weights: state.weights().to_vec(),
        value: state.value(),
        risk,
        cost,
        params,
        prefs,
    })
}

impl ProblemInstance {
    pub fn horizon(&self) -> usize {
        self.forecasts.len()
    }

    /// Slots per period (risky assets plus cash).
    pub fn dim(&self) -> usize {
        self.start_weights.len()
    }

    pub fn start_weights(&self) -> &[f64] {
        &self.start_weights
    }

    /// Per-coordinate derivative of the cost term at trade `z`, using the
    /// zero subgradient at the kink.
    fn cost_derivative(&self, i: usize, z: f64) -> f64 {
        if i + 1 == self.dim() {
            return 0.0; // cash leg is free
        }
        let mut d = self.params.c;
        if z != 0.0 {
            d += self.params.a * z.signum();
            if self.params.b != 0.0 {
                let scale = (self.cost.volume[i] / self.value).sqrt();
                d += 1.5 * self.params.b * self.cost.sigma[i] * z.abs().sqrt() * z.signum() / scale;
            }
        }
        d
    }

    /// One-sided derivative of the cost term from above (`z -> z + 0`).
    fn cost_derivative_right(&self, i: usize, z: f64) -> f64 {
        if z == 0.0 && i + 1 != self.dim() {
            self.params.a + self.params.c
        } else {
            self.cost_derivative(i, z)
        }
    }

    /// One-sided derivative of the cost term from below (`z -> z - 0`).
    fn cost_derivative_left(&self, i: usize, z: f64) -> f64 {
        if z == 0.0 && i + 1 != self.dim() {
            -self.params.a + self.params.c
        } else {
            self.cost_derivative(i, z)
        }
    }

    /// Objective value at the candidate post-trade weight path `weights`
    /// (one simplex point per period).
    pub fn objective(&self, weights: &[Vec<f64>]) -> f64 {
        debug_assert_eq!(weights.len(), self.horizon());
        let dim = self.dim();
        let mut total = 0.0;
        let mut prev = self.start_weights.as_slice();
        let mut z = vec![0.0; dim];
        for (tau, u) in weights.iter().enumerate() {
            debug_assert_eq!(u.len(), dim);
            let mut ret = 0.0;
            for i in 0..dim {
                ret += self.forecasts[tau][i] * u[i];
                z[i] = u[i] - prev[i];
            }
            let phi = cost_unchecked(&z, &self.cost.sigma, &self.cost.volume, self.value, &self.params);
            let psi = self
                .risk
                .portfolio_variance(u)
                .expect("dimensions validated at build");
            total += ret - self.prefs.gamma_trade * phi - self.prefs.gamma_risk * psi;
            prev = u;
        }
        total
    }

    /// Gradient of the objective with respect to each period's weights.
    fn gradient(&self, weights: &[Vec<f64>], out: &mut [Vec<f64>]) {
        let h = self.horizon();
        let dim = self.dim();
        let mut risk_grad = vec![0.0; dim];
        for tau in 0..h {
            let u = &weights[tau];
            let prev: &[f64] = if tau == 0 { &self.start_weights } else { &weights[tau - 1] };
            self.risk.variance_gradient(u, &mut risk_grad);
            let next = weights.get(tau + 1);
            for i in 0..dim {
                let z_now = u[i] - prev[i];
                let mut g = self.forecasts[tau][i]
                    - self.prefs.gamma_risk * risk_grad[i]
                    - self.prefs.gamma_trade * self.cost_derivative(i, z_now);
                if let Some(next_u) = next {
                    let z_next = next_u[i] - u[i];
                    g += self.prefs.gamma_trade * self.cost_derivative(i, z_next);
                }
                out[tau][i] = g;
            }
        }
    }

    /// First-order stationarity check on the simplex that accounts for the
    /// cost kinks: no mass transfer between two coordinates of any period
    /// improves the objective at rate above `tol`. For multi-period problems
    /// this checks each period holding the others fixed.
    fn exchange_stationary(&self, weights: &[Vec<f64>], tol: f64) -> bool {
        let h = self.horizon();
        let dim = self.dim();
        let mut risk_grad = vec![0.0; dim];
        for tau in 0..h {
            let u = &weights[tau];
            let prev: &[f64] = if tau == 0 { &self.start_weights } else { &weights[tau - 1] };
            self.risk.variance_gradient(u, &mut risk_grad);
            let next = weights.get(tau + 1);
            let mut best_gain = f64::NEG_INFINITY;
            let mut best_loss = f64::INFINITY;
            for i in 0..dim {
                let z_now = u[i] - prev[i];
                let smooth = self.forecasts[tau][i] - self.prefs.gamma_risk * risk_grad[i];
                let mut gain = smooth - self.prefs.gamma_trade * self.cost_derivative_right(i, z_now);
                let mut loss = smooth - self.prefs.gamma_trade * self.cost_derivative_left(i, z_now);
                if let Some(next_u) = next {
                    let z_next = next_u[i] - u[i];
                    gain += self.prefs.gamma_trade * self.cost_derivative_left(i, z_next);
                    loss += self.prefs.gamma_trade * self.cost_derivative_right(i, z_next);
                }
                best_gain = best_gain.max(gain);
                if u[i] > 1e-12 {
                    best_loss = best_loss.min(loss);
                }
            }
            if best_gain > best_loss + tol {
                return false;
            }
        }
        true
    }

    pub(crate) fn gradient_into(&self, weights: &[Vec<f64>], out: &mut [Vec<f64>]) {
        self.gradient(weights, out)
    }

    pub(crate) fn is_exchange_stationary(&self, weights: &[Vec<f64>], tol: f64) -> bool {
        self.exchange_stationary(weights, tol)
    }
}
