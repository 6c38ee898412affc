//! Portfolio performance measures at daily frequency.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("return and risk-free series lengths differ ({returns} vs {risk_free})")]
    LengthMismatch { returns: usize, risk_free: usize },
    #[error("need at least two observations, got {0}")]
    TooShort(usize),
}

/// Daily-frequency summary of a realized return path.
///
/// All statistics are population statistics (divide by `T`). The Sharpe
/// ratio is `None` when the excess-return standard deviation is exactly
/// zero; it is never infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceSummary {
    /// Mean realized return per day.
    pub mean_return: f64,
    /// Population standard deviation of realized returns.
    pub volatility: f64,
    /// Mean return in excess of the risk-free asset.
    pub excess_return: f64,
    /// Population standard deviation of excess returns.
    pub excess_risk: f64,
    /// `excess_return / excess_risk`, undefined at zero excess risk.
    pub sharpe: Option<f64>,
}

fn population_stats(series: &[f64]) -> (f64, f64) {
    let t = series.len() as f64;
    let mean = series.iter().sum::<f64>() / t;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t;
    (mean, var.sqrt())
}

/// Summarizes a daily realized-return series against the risk-free series.
pub fn summarize(returns: &[f64], risk_free: &[f64]) -> Result<PerformanceSummary, MetricsError> {
    if returns.len() != risk_free.len() {
        return Err(MetricsError::LengthMismatch {
            returns: returns.len(),
            risk_free: risk_free.len(),
        });
    }
    if returns.len() < 2 {
        return Err(MetricsError::TooShort(returns.len()));
    }
    let (mean_return, volatility) = population_stats(returns);
    let excess: Vec<f64> = returns.iter().zip(risk_free).map(|(r, rf)| r - rf).collect();
    let (excess_return, excess_risk) = population_stats(&excess);
    let sharpe = (excess_risk > 0.0).then(|| excess_return / excess_risk);
    Ok(PerformanceSummary { mean_return, volatility, excess_return, excess_risk, sharpe })
}
