//! Simulated return forecasts.
//!
//! Forecasts perturb realized future returns with zero-mean Gaussian noise
//! and shrink toward zero by the MSE-optimal factor:
//!
//! `r_hat = alpha * (r + eps)`, `eps ~ N(0, noise_variance)`,
//! `alpha = returns_variance / (returns_variance + noise_variance)`.
//!
//! Noise streams are derived per (asset, date) from one master seed, so a
//! forecast for a given day never depends on which task asked for it.

use super::MarketError;
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastConfig {
    /// Variance of the additive noise.
    pub noise_variance: f64,
    /// Assumed variance of the daily returns being forecast.
    pub returns_variance: f64,
    /// Number of forward steps forecast at each decision time.
    pub horizon: usize,
}

impl ForecastConfig {
    pub fn new(noise_variance: f64, returns_variance: f64, horizon: usize) -> Result<Self, MarketError> {
        if !(noise_variance >= 0.0) {
            return Err(MarketError::InvalidForecastConfig(format!(
                "noise variance must be >= 0, got {noise_variance}"
            )));
        }
        if !(returns_variance > 0.0) {
            return Err(MarketError::InvalidForecastConfig(format!(
                "returns variance must be > 0, got {returns_variance}"
            )));
        }
        if horizon == 0 {
            return Err(MarketError::InvalidForecastConfig("horizon must be >= 1".into()));
        }
        Ok(Self { noise_variance, returns_variance, horizon })
    }

    /// MSE-optimal shrinkage applied to the noisy signal.
    pub fn alpha(&self) -> f64 {
        self.returns_variance / (self.returns_variance + self.noise_variance)
    }
}

/// One forecast draw: `alpha * (r + eps)` per asset, noise i.i.d. from `rng`.
pub fn simulate_forecast<R: Rng>(
    realized: &[f64],
    cfg: &ForecastConfig,
    rng: &mut R,
) -> Vec<f64> {
    let alpha = cfg.alpha();
    if cfg.noise_variance == 0.0 {
        return realized.iter().map(|r| alpha * r).collect();
    }
    let normal = Normal::new(0.0, cfg.noise_variance.sqrt()).expect("valid std dev");
    realized.iter().map(|r| alpha * (r + normal.sample(rng))).collect()
}

/// Deterministic forecast source: one noise stream per (asset, date).
#[derive(Debug, Clone)]
pub struct ForecastSimulator {
    cfg: ForecastConfig,
    master_seed: u64,
}

/// Stream-tag namespace for forecast noise.
const FORECAST_TAG: u64 = 0x464f_5243_4153; // "FORCAS"

impl ForecastSimulator {
    pub fn new(cfg: ForecastConfig, master_seed: u64) -> Self {
        Self { cfg, master_seed }
    }

    pub fn config(&self) -> &ForecastConfig {
        &self.cfg
    }

    pub fn alpha(&self) -> f64 {
        self.cfg.alpha()
    }

    /// Forecast of the risky-asset returns realized at panel date
    /// `date_index`. Identical inputs produce bitwise-identical output.
    pub fn forecast_at(&self, realized: &[f64], date_index: usize) -> Vec<f64> {
        let alpha = self.cfg.alpha();
        if self.cfg.noise_variance == 0.0 {
            return realized.iter().map(|r| alpha * r).collect();
        }
        let normal = Normal::new(0.0, self.cfg.noise_variance.sqrt()).expect("valid std dev");
        realized
            .iter()
            .enumerate()
            .map(|(asset, r)| {
                let mut stream =
                    rng::stream(self.master_seed, &[FORECAST_TAG, date_index as u64, asset as u64]);
                alpha * (r + normal.sample(&mut stream))
            })
            .collect()
    }
}
