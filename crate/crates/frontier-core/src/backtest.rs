//! Daily rebalancing simulation.
//!
//! The loop is the same for every strategy: at each date `t` the strategy
//! sees information up to the previous close (plus the sanctioned forecast
//! channel), chooses target weights, the trade executes over day `t` at the
//! realized cost, the day's returns accrue, and weights drift into the next
//! day. Strategies never see realized day-`t` quantities: the engine hands
//! them a [`DecisionContext`] that only exposes past data and forecasts.

use crate::cost::{realized_return, transaction_cost, CostError, CostParams};
use crate::dataset::Dataset;
use crate::metrics::{summarize, MetricsError, PerformanceSummary};
use crate::optimizer::{
    build_mpo, solve, ConstraintSet, OptimizerError, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::policy::{PolicyError, PolicyNetwork, StateInput};
use crate::portfolio::{InvestorPreferences, PortfolioError, PortfolioState};
use crate::risk::FactorRiskModel;
use chrono::NaiveDate;
use std::ops::Range;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("backtest range {start}..{end} is out of panel bounds or empty")]
    BadRange { start: usize, end: usize },
    #[error("insufficient warm-up for {what} at date index {date}")]
    InsufficientWarmup { date: usize, what: &'static str },
    #[error("strategy returned non-simplex weights at date index {date} (sum {sum})")]
    NonSimplexWeights { date: usize, sum: f64 },
    #[error("portfolio value became non-positive at date index {date}")]
    ValueExhausted { date: usize },
    #[error("strategy error at date index {date}: {source}")]
    Strategy {
        date: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Portfolio(#[from] PortfolioError),
}

/// What a strategy may observe when deciding at date `t`: anything realized
/// strictly before `t`, plus the forecast channel.
pub struct DecisionContext<'a> {
    data: &'a Dataset,
    date_index: usize,
    state: &'a PortfolioState,
}

impl<'a> DecisionContext<'a> {
    pub fn date_index(&self) -> usize {
        self.date_index
    }

    pub fn date(&self) -> NaiveDate {
        self.data.panel().dates()[self.date_index]
    }

    pub fn n_risky(&self) -> usize {
        self.data.n_risky()
    }

    pub fn n_total(&self) -> usize {
        self.data.n_total()
    }

    pub fn state(&self) -> &PortfolioState {
        self.state
    }

    /// Forecasts for the next `horizon` days starting with today's return.
    pub fn forecast_path(&self, horizon: usize) -> Option<Vec<Vec<f64>>> {
        self.data.forecast_path(self.date_index, horizon)
    }

    /// Risk model fit on returns strictly before today.
    pub fn risk_model(&self) -> Option<&Arc<FactorRiskModel>> {
        self.data.risk_model(self.date_index)
    }

    /// Trailing-mean cost inputs (exclude today).
    pub fn cost_estimates(&self) -> Option<crate::optimizer::CostEstimates> {
        self.data.cost_estimates(self.date_index)
    }

    /// Log returns for the `len` days before today.
    pub fn log_return_window(&self, len: usize) -> Option<Vec<Vec<f64>>> {
        self.data.log_return_window(self.date_index, len)
    }

    /// Policy-network state for the current decision.
    pub fn state_input(&self, arch: &crate::policy::Architecture) -> Option<StateInput> {
        self.data.state_input(self.date_index, self.state.weights(), arch)
    }
}

/// A daily rebalancing rule: given today's context, produce the post-trade
/// weight vector.
pub trait Strategy {
    fn name(&self) -> String;

    fn target_weights(&mut self, ctx: &DecisionContext<'_>) -> Result<Vec<f64>, BacktestError>;
}

/// Result of one backtest: full paths plus the summary statistics.
#[derive(Debug, Clone)]
pub struct BacktestResult {
    pub dates: Vec<NaiveDate>,
    /// Post-trade weights per day.
    pub weights: Vec<Vec<f64>>,
    /// Executed trades per day.
    pub trades: Vec<Vec<f64>>,
    /// Realized transaction cost per day.
    pub costs: Vec<f64>,
    /// Realized portfolio returns per day, after costs.
    pub returns: Vec<f64>,
    /// Risk-free return per day over the same range.
    pub risk_free: Vec<f64>,
    /// Value path; `values[i]` is the value after day `i`.
    pub values: Vec<f64>,
    pub summary: PerformanceSummary,
}

const SIMPLEX_TOL: f64 = 1e-7;

fn check_simplex(weights: &[f64], date: usize) -> Result<(), BacktestError> {
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL || weights.iter().any(|&w| w < -SIMPLEX_TOL) {
        return Err(BacktestError::NonSimplexWeights { date, sum });
    }
    Ok(())
}

/// Runs `strategy` over the panel dates in `range`, starting from `initial`.
pub fn run_backtest(
    strategy: &mut dyn Strategy,
    data: &Dataset,
    range: Range<usize>,
    params: &CostParams,
    initial: PortfolioState,
) -> Result<BacktestResult, BacktestError> {
    let n_dates = data.n_dates();
    if range.is_empty() || range.end > n_dates || range.start == 0 {
        return Err(BacktestError::BadRange { start: range.start, end: range.end });
    }
    let n_total = data.n_total();
    let days = range.len();
    let mut state = initial;
    let mut dates = Vec::with_capacity(days);
    let mut weights_path = Vec::with_capacity(days);
    let mut trades_path = Vec::with_capacity(days);
    let mut costs_path = Vec::with_capacity(days);
    let mut returns_path = Vec::with_capacity(days);
    let mut rf_path = Vec::with_capacity(days);
    let mut values_path = Vec::with_capacity(days);

    for t in range {
        let target = {
            let ctx = DecisionContext { data, date_index: t, state: &state };
            strategy.target_weights(&ctx)?
        };
        if target.len() != n_total {
            return Err(BacktestError::NonSimplexWeights { date: t, sum: f64::NAN });
        }
        check_simplex(&target, t)?;

        let trade: Vec<f64> =
            target.iter().zip(state.weights()).map(|(u, w)| u - w).collect();
        let returns = data
            .returns_at(t)
            .ok_or(BacktestError::InsufficientWarmup { date: t, what: "returns" })?;
        let sigma = data.realized_sigma(t);
        let volume = data.realized_volume(t);
        let cost = transaction_cost(&trade, &sigma, &volume, state.value(), params)?;
        let pre_trade = state.weights().to_vec();
        let post_trade =
            PortfolioState::new(pre_trade, state.value(), trade.clone())?;
        let day_return = realized_return(&returns, &post_trade, cost)?;
        let value = state.value() * (1.0 + day_return);
        if !(value > 0.0) {
            return Err(BacktestError::ValueExhausted { date: t });
        }

        // Weights drift with the day's gross returns.
        let mut drifted: Vec<f64> =
            target.iter().zip(&returns).map(|(u, r)| u * (1.0 + r)).collect();
        let total: f64 = drifted.iter().sum();
        for w in &mut drifted {
            *w /= total;
        }

        dates.push(data.panel().dates()[t]);
        weights_path.push(target);
        trades_path.push(trade);
        costs_path.push(cost);
        returns_path.push(day_return);
        rf_path.push(data.risk_free_at(t));
        values_path.push(value);

        state = PortfolioState::new(drifted, value, vec![0.0; n_total])?;
    }

    let summary = summarize(&returns_path, &rf_path)?;
    Ok(BacktestResult {
        dates,
        weights: weights_path,
        trades: trades_path,
        costs: costs_path,
        returns: returns_path,
        risk_free: rf_path,
        values: values_path,
        summary,
    })
}

/// Equal-weight baseline: rebalance daily to `1/n` in every risky asset.
pub struct EwStrategy;

/// Builds the equal-weight baseline strategy.
pub fn ew_strategy() -> EwStrategy {
    EwStrategy
}

impl Strategy for EwStrategy {
    fn name(&self) -> String {
        "ew".into()
    }

    fn target_weights(&mut self, ctx: &DecisionContext<'_>) -> Result<Vec<f64>, BacktestError> {
        let n = ctx.n_risky();
        let mut w = vec![1.0 / n as f64; n];
        w.push(0.0);
        Ok(w)
    }
}

/// Keeps everything in cash; useful as a reference point and in tests.
pub struct AllCashStrategy;

impl Strategy for AllCashStrategy {
    fn name(&self) -> String {
        "all-cash".into()
    }

    fn target_weights(&mut self, ctx: &DecisionContext<'_>) -> Result<Vec<f64>, BacktestError> {
        let mut w = vec![0.0; ctx.n_total()];
        w[ctx.n_total() - 1] = 1.0;
        Ok(w)
    }
}

/// Mean-variance strategy solving the convex program each day; `horizon = 1`
/// is the single-period variant.
pub struct MeanVarianceStrategy {
    pub prefs: InvestorPreferences,
    pub params: CostParams,
    pub horizon: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl MeanVarianceStrategy {
    pub fn new(prefs: InvestorPreferences, params: CostParams, horizon: usize) -> Self {
        Self { prefs, params, horizon, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

impl Strategy for MeanVarianceStrategy {
    fn name(&self) -> String {
        if self.horizon <= 1 {
            "spo".into()
        } else {
            format!("mpo-h{}", self.horizon)
        }
    }

    fn target_weights(&mut self, ctx: &DecisionContext<'_>) -> Result<Vec<f64>, BacktestError> {
        let t = ctx.date_index();
        let wrap = |source: OptimizerError| BacktestError::Strategy {
            date: t,
            source: Box::new(source),
        };
        let forecasts = ctx
            .forecast_path(self.horizon)
            .ok_or(BacktestError::InsufficientWarmup { date: t, what: "forecasts" })?;
        let risk = ctx
            .risk_model()
            .ok_or(BacktestError::InsufficientWarmup { date: t, what: "risk model" })?
            .clone();
        let estimates = ctx
            .cost_estimates()
            .ok_or(BacktestError::InsufficientWarmup { date: t, what: "cost estimates" })?;
        let horizon = forecasts.len(); // truncated near the end of data
        let problem = build_mpo(
            &forecasts,
            ctx.state(),
            risk,
            estimates,
            self.params,
            self.prefs,
            &ConstraintSet::default(),
            horizon,
        )
        .map_err(wrap)?;
        let plan = solve(&problem, self.tol, self.max_iter).map_err(wrap)?;
        let target: Vec<f64> = ctx
            .state()
            .weights()
            .iter()
            .zip(plan.first_trade())
            .map(|(w, z)| w + z)
            .collect();
        Ok(target)
    }
}

/// Trained policy network acting greedily.
pub struct PolicyStrategy {
    pub net: PolicyNetwork,
}

impl Strategy for PolicyStrategy {
    fn name(&self) -> String {
        format!("frontier-{}", self.net.architecture().variant.name())
    }

    fn target_weights(&mut self, ctx: &DecisionContext<'_>) -> Result<Vec<f64>, BacktestError> {
        let t = ctx.date_index();
        let state = ctx
            .state_input(self.net.architecture())
            .ok_or(BacktestError::InsufficientWarmup { date: t, what: "policy state" })?;
        self.net.act(&state).map_err(|source: PolicyError| BacktestError::Strategy {
            date: t,
            source: Box::new(source),
        })
    }
}
