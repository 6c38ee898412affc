//! Aligned OHLCV panel and daily returns.

use super::MarketError;
use chrono::NaiveDate;

/// Per-asset daily OHLCV series plus the cash asset's daily return, aligned
/// on one trading calendar.
///
/// Risky assets are indexed `0..n_risky()`; the cash slot has no price or
/// volume series, its return comes from [`PricePanel::risk_free`].
#[derive(Debug, Clone)]
pub struct PricePanel {
    assets: Vec<String>,
    dates: Vec<NaiveDate>,
    open: Vec<Vec<f64>>,
    high: Vec<Vec<f64>>,
    low: Vec<Vec<f64>>,
    close: Vec<Vec<f64>>,
    volume: Vec<Vec<f64>>,
    risk_free: Vec<f64>,
}

impl PricePanel {
    /// Builds a panel from per-asset series. Series are `[asset][date]`,
    /// already aligned to `dates`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        assets: Vec<String>,
        dates: Vec<NaiveDate>,
        open: Vec<Vec<f64>>,
        high: Vec<Vec<f64>>,
        low: Vec<Vec<f64>>,
        close: Vec<Vec<f64>>,
        volume: Vec<Vec<f64>>,
        risk_free: Vec<f64>,
    ) -> Result<Self, MarketError> {
        if dates.is_empty() {
            return Err(MarketError::EmptyCalendar);
        }
        let t = dates.len();
        if risk_free.len() != t {
            return Err(MarketError::DimensionMismatch { expected: t, actual: risk_free.len() });
        }
        let n = assets.len();
        for (name, series) in [
            ("open", &open),
            ("high", &high),
            ("low", &low),
            ("close", &close),
            ("volume", &volume),
        ] {
            if series.len() != n {
                return Err(MarketError::DimensionMismatch { expected: n, actual: series.len() });
            }
            for (a, s) in series.iter().enumerate() {
                if s.len() != t {
                    return Err(MarketError::CalendarMisalignment {
                        asset: assets[a].clone(),
                        msg: format!("{name} series has {} rows, calendar has {t}", s.len()),
                    });
                }
            }
        }
        for a in 0..n {
            for t_i in 0..t {
                for series in [&open, &high, &low, &close] {
                    let p = series[a][t_i];
                    if !(p > 0.0) {
                        return Err(MarketError::NonPositivePrice {
                            asset: assets[a].clone(),
                            date: dates[t_i],
                        });
                    }
                }
                if !(volume[a][t_i] >= 0.0) {
                    return Err(MarketError::NegativeVolume {
                        asset: assets[a].clone(),
                        date: dates[t_i],
                    });
                }
            }
        }
        Ok(Self { assets, dates, open, high, low, close, volume, risk_free })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    /// Number of risky assets (excludes cash).
    pub fn n_risky(&self) -> usize {
        self.assets.len()
    }

    /// Number of portfolio slots: risky assets plus cash.
    pub fn n_total(&self) -> usize {
        self.assets.len() + 1
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn open(&self, asset: usize, t: usize) -> f64 {
        self.open[asset][t]
    }

    pub fn high(&self, asset: usize, t: usize) -> f64 {
        self.high[asset][t]
    }

    pub fn low(&self, asset: usize, t: usize) -> f64 {
        self.low[asset][t]
    }

    pub fn close(&self, asset: usize, t: usize) -> f64 {
        self.close[asset][t]
    }

    pub fn volume(&self, asset: usize, t: usize) -> f64 {
        self.volume[asset][t]
    }

    /// Volume cross-section on date `t`, one entry per risky asset.
    pub fn volume_at(&self, t: usize) -> Vec<f64> {
        (0..self.n_risky()).map(|a| self.volume[a][t]).collect()
    }

    pub fn volume_series(&self, asset: usize) -> &[f64] {
        &self.volume[asset]
    }

    pub fn risk_free(&self) -> &[f64] {
        &self.risk_free
    }

    /// Intraday volatility proxy `|log(open) - log(close)|` for every risky
    /// asset and date, as `[asset][date]`. Panel invariants guarantee
    /// positive prices, so this cannot fail.
    pub fn sigma_panel(&self) -> Vec<Vec<f64>> {
        (0..self.n_risky())
            .map(|a| {
                (0..self.n_dates())
                    .map(|t| (self.open[a][t].ln() - self.close[a][t].ln()).abs())
                    .collect()
            })
            .collect()
    }
}

/// Daily simple and log returns for every slot including cash, defined from
/// the panel's second date onward.
///
/// Index `i` of every series corresponds to panel date index `i + 1`: the
/// return realized over the day ending at that date. The cash row's simple
/// return equals the risk-free series.
#[derive(Debug, Clone)]
pub struct ReturnsPanel {
    dates: Vec<NaiveDate>,
    simple: Vec<Vec<f64>>,
    log: Vec<Vec<f64>>,
}

impl ReturnsPanel {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn n_obs(&self) -> usize {
        self.dates.len()
    }

    /// Number of slots including cash.
    pub fn n_total(&self) -> usize {
        self.simple.len()
    }

    /// Simple return of `slot` at returns-index `i` (panel date `i + 1`).
    pub fn simple(&self, slot: usize, i: usize) -> f64 {
        self.simple[slot][i]
    }

    pub fn log(&self, slot: usize, i: usize) -> f64 {
        self.log[slot][i]
    }

    pub fn simple_series(&self, slot: usize) -> &[f64] {
        &self.simple[slot]
    }

    pub fn log_series(&self, slot: usize) -> &[f64] {
        &self.log[slot]
    }

    /// Cross-section of simple returns at returns-index `i`, cash last.
    pub fn cross_section(&self, i: usize) -> Vec<f64> {
        self.simple.iter().map(|s| s[i]).collect()
    }
}

/// Computes simple and log returns from closing prices; the cash row comes
/// from the risk-free series.
pub fn compute_returns(panel: &PricePanel) -> Result<ReturnsPanel, MarketError> {
    if panel.n_dates() < 2 {
        return Err(MarketError::SingleDatePanel);
    }
    let t = panel.n_dates();
    let mut simple = Vec::with_capacity(panel.n_total());
    let mut log = Vec::with_capacity(panel.n_total());
    for a in 0..panel.n_risky() {
        let mut s = Vec::with_capacity(t - 1);
        let mut l = Vec::with_capacity(t - 1);
        for i in 1..t {
            let prev = panel.close(a, i - 1);
            let cur = panel.close(a, i);
            s.push((cur - prev) / prev);
            l.push((cur / prev).ln());
        }
        simple.push(s);
        log.push(l);
    }
    // Cash: the risk-free rate on the day the return accrues.
    let rf = &panel.risk_free()[1..];
    simple.push(rf.to_vec());
    log.push(rf.iter().map(|r| r.ln_1p()).collect());
    Ok(ReturnsPanel { dates: panel.dates()[1..].to_vec(), simple, log })
}
