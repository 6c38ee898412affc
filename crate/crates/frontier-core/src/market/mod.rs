//! Market data: OHLCV panels, returns, rolling estimates, and simulated
//! return forecasts.

mod features;
mod forecast;
mod load;
mod panel;

pub use features::{
    intraday_volatility_proxy, normalize_features, rolling_volatility_estimate,
    rolling_volume_estimate, ROLLING_WINDOW,
};
pub use forecast::{simulate_forecast, ForecastConfig, ForecastSimulator};
pub use load::{load_panel, load_panel_from_dir, parse_asset_csv, parse_risk_free_csv, OhlcvRow};
pub use panel::{compute_returns, PricePanel, ReturnsPanel};

use chrono::NaiveDate;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: line {line}: {msg}")]
    MalformedRow { path: String, line: u64, msg: String },
    #[error("non-positive price for {asset} on {date}")]
    NonPositivePrice { asset: String, date: NaiveDate },
    #[error("negative volume for {asset} on {date}")]
    NegativeVolume { asset: String, date: NaiveDate },
    #[error("calendar misalignment for {asset}: {msg}")]
    CalendarMisalignment { asset: String, msg: String },
    #[error("empty calendar: no trading dates in the requested range")]
    EmptyCalendar,
    #[error("panel must cover at least two dates to compute returns")]
    SingleDatePanel,
    #[error("insufficient history: need {needed} days before index {at}, have {available}")]
    InsufficientHistory { at: usize, needed: usize, available: usize },
    #[error("degenerate baseline: zero mean over the normalization window for series {series}")]
    DegenerateBaseline { series: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid forecast config: {0}")]
    InvalidForecastConfig(String),
    #[error("io error for {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
