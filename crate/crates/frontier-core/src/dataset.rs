//! Per-date derived data shared by training, backtesting, and sweeps.
//!
//! A [`Dataset`] precomputes, for every panel date where enough history
//! exists: realized returns, the intraday volatility proxy, trailing
//! volume/volatility estimates (raw and normalized), per-date factor risk
//! models, and seeded return forecasts. Dates without enough warm-up carry
//! `None`; consumers that need a missing quantity fail loudly rather than
//! silently padding.
//!
//! Forecast noise is keyed by (seed, asset, date), so two datasets with the
//! same seed agree on every forecast regardless of which strategies or tasks
//! read them.

use crate::market::{
    compute_returns, normalize_features, rolling_volatility_estimate, rolling_volume_estimate,
    ForecastConfig, ForecastSimulator, MarketError, PricePanel, ReturnsPanel, ROLLING_WINDOW,
};
use crate::optimizer::CostEstimates;
use crate::policy::{Architecture, StateInput};
use crate::risk::{default_factor_count, fit_factor_model, trailing_covariance, FactorRiskModel, RiskError};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("covariance window must be >= 2, got {0}")]
    BadCovarianceWindow(usize),
}

/// Controls how much history feeds each derived quantity.
#[derive(Debug, Clone)]
pub struct DatasetConfig {
    /// Trailing window for the return covariance, in trading days.
    pub covariance_window: usize,
    /// Retained factors; `None` picks `min(15, n - 1)`.
    pub factor_count: Option<usize>,
    /// Days immediately before `train_start` whose mean normalizes the
    /// volume/volatility features.
    pub baseline_days: usize,
    /// Panel index of the first training date.
    pub train_start: usize,
    pub forecast: ForecastConfig,
    /// Master seed for forecast noise.
    pub seed: u64,
}

impl DatasetConfig {
    pub fn new(train_start: usize, forecast: ForecastConfig, seed: u64) -> Self {
        Self {
            covariance_window: crate::risk::DEFAULT_COVARIANCE_WINDOW,
            factor_count: None,
            baseline_days: 30,
            train_start,
            forecast,
            seed,
        }
    }
}

/// Immutable bundle of the panel and everything derived from it.
pub struct Dataset {
    panel: Arc<PricePanel>,
    returns: ReturnsPanel,
    sigma: Vec<Vec<f64>>,
    vhat: Vec<Option<Vec<f64>>>,
    shat: Vec<Option<Vec<f64>>>,
    vhat_norm: Option<Vec<Vec<f64>>>,
    shat_norm: Option<Vec<Vec<f64>>>,
    risk_models: Vec<Option<Arc<FactorRiskModel>>>,
    forecasts: Vec<Option<Vec<f64>>>,
    cfg: DatasetConfig,
}

impl Dataset {
    pub fn prepare(panel: Arc<PricePanel>, cfg: DatasetConfig) -> Result<Self, DatasetError> {
        if cfg.covariance_window < 2 {
            return Err(DatasetError::BadCovarianceWindow(cfg.covariance_window));
        }
        let returns = compute_returns(&panel)?;
        let sigma = panel.sigma_panel();
        let t_len = panel.n_dates();
        let n = panel.n_risky();

        let mut vhat: Vec<Option<Vec<f64>>> = vec![None; t_len];
        let mut shat: Vec<Option<Vec<f64>>> = vec![None; t_len];
        for t in ROLLING_WINDOW..t_len {
            vhat[t] = Some(rolling_volume_estimate(&panel, t).expect("window checked"));
            shat[t] = Some(rolling_volatility_estimate(&sigma, t).expect("window checked"));
        }

        // Feature normalization baseline: the `baseline_days` estimates
        // immediately before the training start. Unavailable baselines leave
        // the normalized features empty rather than failing the whole
        // dataset; only feature-consuming strategies care.
        let (vhat_norm, shat_norm) = if cfg.train_start >= cfg.baseline_days + ROLLING_WINDOW
            && cfg.train_start <= t_len
            && cfg.baseline_days > 0
        {
            let baseline = cfg.train_start - cfg.baseline_days..cfg.train_start;
            let vhat_series: Vec<Vec<f64>> = (0..n)
                .map(|a| {
                    (0..t_len)
                        .map(|t| vhat[t].as_ref().map_or(f64::NAN, |v| v[a]))
                        .collect()
                })
                .collect();
            let shat_series: Vec<Vec<f64>> = (0..n)
                .map(|a| {
                    (0..t_len)
                        .map(|t| shat[t].as_ref().map_or(f64::NAN, |v| v[a]))
                        .collect()
                })
                .collect();
            match (
                normalize_features(&vhat_series, baseline.clone()),
                normalize_features(&shat_series, baseline),
            ) {
                (Ok(v), Ok(s)) => (Some(v), Some(s)),
                _ => (None, None),
            }
        } else {
            (None, None)
        };

        let k = cfg.factor_count.unwrap_or_else(|| default_factor_count(n));
        let mut risk_models: Vec<Option<Arc<FactorRiskModel>>> = vec![None; t_len];
        for t in (cfg.covariance_window + 1)..t_len {
            let cov = trailing_covariance(&returns, t, cfg.covariance_window)?;
            let k = k.clamp(1, cov.nrows());
            risk_models[t] = Some(Arc::new(fit_factor_model(&cov, k)?));
        }

        let sim = ForecastSimulator::new(cfg.forecast, cfg.seed);
        let mut forecasts: Vec<Option<Vec<f64>>> = vec![None; t_len];
        for t in 1..t_len {
            let realized: Vec<f64> = (0..n).map(|a| returns.simple(a, t - 1)).collect();
            forecasts[t] = Some(sim.forecast_at(&realized, t));
        }

        Ok(Self {
            panel,
            returns,
            sigma,
            vhat,
            shat,
            vhat_norm,
            shat_norm,
            risk_models,
            forecasts,
            cfg,
        })
    }

    pub fn panel(&self) -> &PricePanel {
        &self.panel
    }

    pub fn returns(&self) -> &ReturnsPanel {
        &self.returns
    }

    pub fn config(&self) -> &DatasetConfig {
        &self.cfg
    }

    pub fn n_risky(&self) -> usize {
        self.panel.n_risky()
    }

    pub fn n_total(&self) -> usize {
        self.panel.n_total()
    }

    pub fn n_dates(&self) -> usize {
        self.panel.n_dates()
    }

    /// Realized simple returns (cash last) for the day ending at panel date
    /// `t`. Known only at the end of day `t`.
    pub fn returns_at(&self, t: usize) -> Option<Vec<f64>> {
        (t >= 1 && t < self.n_dates()).then(|| self.returns.cross_section(t - 1))
    }

    /// Risk-free return on date `t`.
    pub fn risk_free_at(&self, t: usize) -> f64 {
        self.panel.risk_free()[t]
    }

    /// Sanctioned forecast of the returns realized at date `t` (cash slot
    /// carries the risk-free rate).
    pub fn forecast_vector(&self, t: usize) -> Option<Vec<f64>> {
        let risky = self.forecasts.get(t)?.as_ref()?;
        let mut v = risky.clone();
        v.push(self.risk_free_at(t));
        Some(v)
    }

    /// Forecasts for dates `t .. t + horizon`, truncated at the end of the
    /// panel. Returns `None` when not even the first step is available.
    pub fn forecast_path(&self, t: usize, horizon: usize) -> Option<Vec<Vec<f64>>> {
        let mut path = Vec::with_capacity(horizon);
        for tau in t..t + horizon {
            match self.forecast_vector(tau) {
                Some(f) => path.push(f),
                None => break,
            }
        }
        (!path.is_empty()).then_some(path)
    }

    /// Factor risk model estimated from returns strictly before date `t`.
    pub fn risk_model(&self, t: usize) -> Option<&Arc<FactorRiskModel>> {
        self.risk_models.get(t)?.as_ref()
    }

    /// Trailing-mean volatility and volume estimates available at the start
    /// of date `t` (exclude day `t` itself).
    pub fn cost_estimates(&self, t: usize) -> Option<CostEstimates> {
        Some(CostEstimates {
            sigma: self.shat.get(t)?.clone()?,
            volume: self.vhat.get(t)?.clone()?,
        })
    }

    /// Normalized volume and volatility features for date `t`.
    pub fn features(&self, t: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let vn = self.vhat_norm.as_ref()?;
        let sn = self.shat_norm.as_ref()?;
        if t < ROLLING_WINDOW || t >= self.n_dates() {
            return None;
        }
        let volume: Vec<f64> = vn.iter().map(|series| series[t]).collect();
        let vol: Vec<f64> = sn.iter().map(|series| series[t]).collect();
        Some((volume, vol))
    }

    /// Realized intraday volatility proxy for every risky asset on date `t`.
    /// Realized during day `t`: engine-side only.
    pub fn realized_sigma(&self, t: usize) -> Vec<f64> {
        self.sigma.iter().map(|series| series[t]).collect()
    }

    /// Realized traded volume on date `t`. Engine-side only.
    pub fn realized_volume(&self, t: usize) -> Vec<f64> {
        self.panel.volume_at(t)
    }

    /// Log-return window for dates `t - len .. t`, one row per slot (cash
    /// last), oldest observation first.
    pub fn log_return_window(&self, t: usize, len: usize) -> Option<Vec<Vec<f64>>> {
        if t < len + 1 || t > self.n_dates() {
            return None;
        }
        let lo = t - len - 1; // returns-index of panel date t - len
        Some(
            (0..self.n_total())
                .map(|slot| self.returns.log_series(slot)[lo..lo + len].to_vec())
                .collect(),
        )
    }

    /// Assembles the policy-network state for a decision at date `t` with
    /// current weights `weights`. One code path serves training and
    /// backtesting, so the two cannot drift apart.
    pub fn state_input(
        &self,
        t: usize,
        weights: &[f64],
        arch: &Architecture,
    ) -> Option<StateInput> {
        let window = if arch.uses_window() {
            Some(self.log_return_window(t, arch.lookback)?)
        } else {
            None
        };
        let forecasts = if arch.uses_forecasts() {
            let path = self.forecast_path(t, arch.horizon)?;
            if path.len() < arch.horizon {
                return None;
            }
            Some(path)
        } else {
            None
        };
        let (volume_features, volatility_features) = self.features(t)?;
        Some(StateInput {
            log_return_window: window,
            forecasts,
            weights: weights.to_vec(),
            volume_features,
            volatility_features,
        })
    }

    /// Earliest date at which a strategy with the given lookback and
    /// forecast horizon can decide: every derived quantity exists.
    pub fn first_decidable(&self, lookback: usize, needs_features: bool) -> usize {
        let mut t = (self.cfg.covariance_window + 1).max(ROLLING_WINDOW).max(lookback + 1).max(1);
        if needs_features {
            t = t.max(ROLLING_WINDOW);
        }
        t
    }

    /// Last date (inclusive) with realized returns plus a full `horizon` of
    /// forecasts.
    pub fn last_decidable(&self, horizon: usize) -> usize {
        self.n_dates().saturating_sub(horizon.max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyVariant;
    use chrono::NaiveDate;

    fn synthetic_panel(n: usize, t: usize) -> Arc<PricePanel> {
        let dates: Vec<NaiveDate> = (0..t as u64)
            .map(|i| NaiveDate::from_ymd_opt(2018, 1, 1).unwrap() + chrono::Days::new(i))
            .collect();
        let mut close = Vec::new();
        let mut open = Vec::new();
        for a in 0..n {
            let mut c = Vec::with_capacity(t);
            let mut o = Vec::with_capacity(t);
            let mut price = 50.0 + 10.0 * a as f64;
            for i in 0..t {
                o.push(price * 1.001);
                price *= 1.0 + 0.001 * ((i + a) as f64).sin();
                c.push(price);
            }
            close.push(c);
            open.push(o);
        }
        Arc::new(
            PricePanel::new(
                (0..n).map(|i| format!("A{i}")).collect(),
                dates,
                open,
                close.clone(),
                close.clone(),
                close.clone(),
                vec![vec![1000.0; t]; n],
                vec![0.0001; t],
            )
            .unwrap(),
        )
    }

    fn config(train_start: usize, seed: u64) -> DatasetConfig {
        DatasetConfig {
            covariance_window: 60,
            factor_count: None,
            baseline_days: 30,
            train_start,
            forecast: ForecastConfig::new(0.02, 0.005, 2).unwrap(),
            seed,
        }
    }

    #[test]
    fn warmup_boundaries_are_respected() {
        let data = Dataset::prepare(synthetic_panel(3, 120), config(45, 7)).unwrap();
        assert!(data.risk_model(60).is_none());
        assert!(data.risk_model(61).is_some());
        assert!(data.cost_estimates(9).is_none());
        assert!(data.cost_estimates(10).is_some());
        assert!(data.returns_at(0).is_none());
        assert!(data.returns_at(1).is_some());
        assert!(data.forecast_vector(0).is_none());
        assert!(data.forecast_vector(1).is_some());
        assert!(data.log_return_window(20, 20).is_none());
        assert!(data.log_return_window(21, 20).is_some());
    }

    #[test]
    fn forecasts_are_seed_stable_and_date_keyed() {
        let panel = synthetic_panel(3, 120);
        let a = Dataset::prepare(panel.clone(), config(45, 7)).unwrap();
        let b = Dataset::prepare(panel.clone(), config(45, 7)).unwrap();
        let c = Dataset::prepare(panel, config(45, 8)).unwrap();
        assert_eq!(a.forecast_vector(50), b.forecast_vector(50));
        assert_ne!(a.forecast_vector(50), c.forecast_vector(50));
    }

    #[test]
    fn forecast_cash_slot_is_risk_free() {
        let data = Dataset::prepare(synthetic_panel(2, 80), config(45, 7)).unwrap();
        let f = data.forecast_vector(30).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f[2], 0.0001);
    }

    #[test]
    fn state_input_requires_full_horizon() {
        let data = Dataset::prepare(synthetic_panel(2, 120), config(45, 7)).unwrap();
        let arch = Architecture::standard(PolicyVariant::ForecastOnly, 2);
        let w = vec![0.0, 0.0, 1.0];
        let last = data.n_dates() - 1;
        // At the final date only one forecast step exists; a two-step
        // architecture cannot decide.
        assert!(data.state_input(last, &w, &arch).is_none());
        assert!(data.state_input(last - 1, &w, &arch).is_some());
    }

    #[test]
    fn log_window_matches_returns() {
        let data = Dataset::prepare(synthetic_panel(1, 60), config(45, 7)).unwrap();
        let window = data.log_return_window(30, 5).unwrap();
        assert_eq!(window.len(), 2);
        assert_eq!(window[0].len(), 5);
        // Newest entry is the return dated t - 1 = 29, returns-index 28.
        assert_eq!(window[0][4], data.returns().log(0, 28));
        assert_eq!(window[0][0], data.returns().log(0, 24));
    }

    #[test]
    fn missing_baseline_disables_features_only() {
        // train_start too early to host a 30-day baseline.
        let data = Dataset::prepare(synthetic_panel(2, 120), config(20, 7)).unwrap();
        assert!(data.features(50).is_none());
        assert!(data.risk_model(61).is_some());
    }
}
