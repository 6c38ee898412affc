//! Non-linear transaction-cost model and realized portfolio return.
//!
//! Trading a fraction `z_i` of portfolio value in asset `i` costs
//!
//! `a*|z_i| + b * sigma_i * |z_i|^(3/2) / sqrt(V_i / v) + c * z_i`
//!
//! summed over the risky assets only; moving cash is free. `a` captures half
//! the bid-ask spread plus commissions, the `b` term models market impact
//! growing with volatility and shrinking with traded volume, and `c` skews
//! buys against sells.

use crate::portfolio::PortfolioState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("cost parameters a and b must be non-negative (a={a}, b={b})")]
    InvalidParams { a: f64, b: f64 },
    #[error("asset {asset} has zero traded volume but a nonzero trade")]
    ZeroVolumeWithTrade { asset: usize },
    #[error("portfolio value must be positive (got {0})")]
    NonPositiveValue(f64),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Coefficients of the transaction-cost model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Half bid-ask spread plus commission, as a fraction of traded value.
    pub a: f64,
    /// Market-impact scale on the 3/2-power term.
    pub b: f64,
    /// Buy/sell asymmetry; may take any sign.
    pub c: f64,
}

impl CostParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, CostError> {
        if !(a >= 0.0) || !(b >= 0.0) || !c.is_finite() {
            return Err(CostError::InvalidParams { a, b });
        }
        Ok(Self { a, b, c })
    }

    /// Frictionless market.
    pub fn zero() -> Self {
        Self { a: 0.0, b: 0.0, c: 0.0 }
    }
}

/// Cost formula without validation; `trade` has the cash slot last, `sigma`
/// and `volume` cover risky assets only.
pub(crate) fn cost_unchecked(
    trade: &[f64],
    sigma: &[f64],
    volume: &[f64],
    value: f64,
    params: &CostParams,
) -> f64 {
    let n = sigma.len();
    let mut total = 0.0;
    for i in 0..n {
        let z = trade[i];
        let abs = z.abs();
        total += params.a * abs + params.c * z;
        if params.b != 0.0 && abs > 0.0 {
            total += params.b * sigma[i] * abs * abs.sqrt() / (volume[i] / value).sqrt();
        }
    }
    total
}

/// Total transaction cost of executing `trade` (fractions of portfolio
/// value, cash slot last). `sigma` and `volume` are per risky asset; `value`
/// is the current portfolio value used to scale volume.
pub fn transaction_cost(
    trade: &[f64],
    sigma: &[f64],
    volume: &[f64],
    value: f64,
    params: &CostParams,
) -> Result<f64, CostError> {
    let n = sigma.len();
    if trade.len() != n + 1 {
        return Err(CostError::DimensionMismatch { expected: n + 1, actual: trade.len() });
    }
    if volume.len() != n {
        return Err(CostError::DimensionMismatch { expected: n, actual: volume.len() });
    }
    if !(value > 0.0) {
        return Err(CostError::NonPositiveValue(value));
    }
    for i in 0..n {
        if volume[i] <= 0.0 && trade[i] != 0.0 {
            return Err(CostError::ZeroVolumeWithTrade { asset: i });
        }
    }
    Ok(cost_unchecked(trade, sigma, volume, value, params))
}

/// Realized portfolio return after costs: `r . w + r . z - cost`.
pub fn realized_return(
    returns: &[f64],
    state: &PortfolioState,
    cost: f64,
) -> Result<f64, CostError> {
    if returns.len() != state.n_total() {
        return Err(CostError::DimensionMismatch {
            expected: state.n_total(),
            actual: returns.len(),
        });
    }
    let held: f64 = returns.iter().zip(state.weights()).map(|(r, w)| r * w).sum();
    let traded: f64 = returns.iter().zip(state.trade()).map(|(r, z)| r * z).sum();
    Ok(held + traded - cost)
}
