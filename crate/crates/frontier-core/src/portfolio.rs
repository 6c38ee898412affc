//! Portfolio vocabulary: holdings state and investor preferences.
//!
//! Weight vectors are indexed `0..n` for the risky assets with the cash slot
//! last (index `n`). Weights sum to one, trades sum to zero (self-financing)
//! and the engine is long-only throughout.

use thiserror::Error;

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Tolerance on `sum(trade) == 0`.
pub const TRADE_SUM_TOL: f64 = 1e-9;
/// Weights this far below zero are treated as rounding noise, not shorts.
pub const LONG_ONLY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PortfolioError {
    #[error("weights must sum to 1 (got {0})")]
    WeightSum(f64),
    #[error("long-only violation: weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("trade vector must sum to 0 (got {0})")]
    TradeSum(f64),
    #[error("portfolio value must be positive (got {0})")]
    NonPositiveValue(f64),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("preference parameters must be non-negative (got risk {risk}, trade {trade})")]
    NegativePreference { risk: f64, trade: f64 },
}

/// Risk- and trade-aversion multipliers describing one investor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvestorPreferences {
    pub gamma_risk: f64,
    pub gamma_trade: f64,
}

impl InvestorPreferences {
    pub fn new(gamma_risk: f64, gamma_trade: f64) -> Result<Self, PortfolioError> {
        if !(gamma_risk >= 0.0) || !(gamma_trade >= 0.0) {
            return Err(PortfolioError::NegativePreference {
                risk: gamma_risk,
                trade: gamma_trade,
            });
        }
        Ok(Self { gamma_risk, gamma_trade })
    }

    /// Preference-free investor: pure return maximization.
    pub fn neutral() -> Self {
        Self { gamma_risk: 0.0, gamma_trade: 0.0 }
    }
}

/// Current holdings: weight vector, total value, and the trade that produced
/// the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    weights: Vec<f64>,
    value: f64,
    trade: Vec<f64>,
}

impl PortfolioState {
    pub fn new(weights: Vec<f64>, value: f64, trade: Vec<f64>) -> Result<Self, PortfolioError> {
        if trade.len() != weights.len() {
            return Err(PortfolioError::DimensionMismatch {
                expected: weights.len(),
                actual: trade.len(),
            });
        }
        if !(value > 0.0) {
            return Err(PortfolioError::NonPositiveValue(value));
        }
        let wsum: f64 = weights.iter().sum();
        if (wsum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(PortfolioError::WeightSum(wsum));
        }
        if let Some((i, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| w < -LONG_ONLY_TOL)
        {
            return Err(PortfolioError::NegativeWeight { index: i, value: w });
        }
        let zsum: f64 = trade.iter().sum();
        if zsum.abs() > TRADE_SUM_TOL {
            return Err(PortfolioError::TradeSum(zsum));
        }
        Ok(Self { weights, value, trade })
    }

    /// Fully-in-cash state with a zero trade vector. `n_total` counts the
    /// risky assets plus the cash slot.
    pub fn all_cash(n_total: usize, value: f64) -> Result<Self, PortfolioError> {
        let mut weights = vec![0.0; n_total];
        weights[n_total - 1] = 1.0;
        Self::new(weights, value, vec![0.0; n_total])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn trade(&self) -> &[f64] {
        &self.trade
    }

    /// Number of slots including cash.
    pub fn n_total(&self) -> usize {
        self.weights.len()
    }

    pub fn cash_weight(&self) -> f64 {
        *self.weights.last().expect("non-empty weights")
    }
}
