//! Rolling estimates and feature normalization.

use super::panel::PricePanel;
use super::MarketError;
use std::ops::Range;

/// Trailing window length for volume and volatility estimates, in trading
/// days. Day `t` itself is excluded from the window.
pub const ROLLING_WINDOW: usize = 10;

fn trailing_mean(series: &[f64], t: usize) -> Result<f64, MarketError> {
    if t < ROLLING_WINDOW || t > series.len() {
        return Err(MarketError::InsufficientHistory {
            at: t,
            needed: ROLLING_WINDOW,
            available: t.min(series.len()),
        });
    }
    Ok(series[t - ROLLING_WINDOW..t].iter().sum::<f64>() / ROLLING_WINDOW as f64)
}

/// Trailing 10-day mean traded volume per risky asset, excluding day `t`.
pub fn rolling_volume_estimate(panel: &PricePanel, t: usize) -> Result<Vec<f64>, MarketError> {
    (0..panel.n_risky())
        .map(|a| trailing_mean(panel.volume_series(a), t))
        .collect()
}

/// Trailing 10-day mean volatility per asset, excluding day `t`.
/// `sigmas` is `[asset][date]`, normally from [`PricePanel::sigma_panel`].
pub fn rolling_volatility_estimate(sigmas: &[Vec<f64>], t: usize) -> Result<Vec<f64>, MarketError> {
    sigmas.iter().map(|s| trailing_mean(s, t)).collect()
}

/// Intraday volatility proxy `|log(open) - log(close)|`.
pub fn intraday_volatility_proxy(open: f64, close: f64) -> Result<f64, MarketError> {
    if !(open > 0.0) || !(close > 0.0) {
        return Err(MarketError::NonPositivePrice {
            asset: String::new(),
            date: chrono::NaiveDate::MIN,
        });
    }
    Ok((open.ln() - close.ln()).abs())
}

/// Divides each series by its own mean over `baseline` (the 30 trading days
/// preceding the training start). Errors on an empty or out-of-range window
/// and on a zero baseline mean.
pub fn normalize_features(
    values: &[Vec<f64>],
    baseline: Range<usize>,
) -> Result<Vec<Vec<f64>>, MarketError> {
    if baseline.is_empty() {
        return Err(MarketError::InsufficientHistory {
            at: baseline.start,
            needed: 1,
            available: 0,
        });
    }
    values
        .iter()
        .enumerate()
        .map(|(idx, series)| {
            if baseline.end > series.len() {
                return Err(MarketError::InsufficientHistory {
                    at: baseline.end,
                    needed: baseline.len(),
                    available: series.len().saturating_sub(baseline.start),
                });
            }
            let mean =
                series[baseline.clone()].iter().sum::<f64>() / baseline.len() as f64;
            if mean == 0.0 {
                return Err(MarketError::DegenerateBaseline { series: idx });
            }
            Ok(series.iter().map(|v| v / mean).collect())
        })
        .collect()
}
