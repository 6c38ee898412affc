//! Run configuration: a TOML file with sections, overridable by CLI flags.
//!
//! The file is the reproducibility artifact: every run copies its resolved
//! configuration into the output directory, and identical configurations
//! with identical seeds produce byte-identical outputs.

use crate::market::{ForecastConfig, MarketError, PricePanel};
use crate::policy::TrainConfig;
use crate::sweep::{StrategyFamily, SweepGrid};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad date {field} = {value:?} (expected YYYY-MM-DD)")]
    BadDate { field: &'static str, value: String },
    #[error("train range [{train_start}, {train_end}) is empty or inverted")]
    BadTrainRange { train_start: NaiveDate, train_end: NaiveDate },
    #[error("test range [{test_start}, {test_end}) is empty or inverted")]
    BadTestRange { test_start: NaiveDate, test_end: NaiveDate },
    #[error("test range must start at or after the train range end ({test_start} < {train_end})")]
    OverlappingRanges { train_end: NaiveDate, test_start: NaiveDate },
    #[error("referenced file does not exist: {0}")]
    MissingFile(PathBuf),
    #[error("unknown strategy family {0:?}")]
    UnknownFamily(String),
    #[error("no strategy families selected")]
    NoFamilies,
    #[error("empty preference grid")]
    EmptyGrid,
    #[error("seeds must be >= 1")]
    NoSeeds,
    #[error("unknown grid preset {0:?} (expected \"full\" or \"small\")")]
    UnknownGrid(String),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("invalid value: {0}")]
    Invalid(String),
}

fn default_covariance_window() -> usize {
    crate::risk::DEFAULT_COVARIANCE_WINDOW
}

fn default_baseline_days() -> usize {
    30
}

fn default_tolerance() -> f64 {
    crate::optimizer::DEFAULT_TOL
}

fn default_max_iterations() -> usize {
    crate::optimizer::DEFAULT_MAX_ITER
}

fn default_episodes() -> usize {
    5_000
}

fn default_episode_length() -> usize {
    30
}

fn default_learning_rate() -> f64 {
    1e-3
}

fn default_grad_clip() -> f64 {
    10.0
}

fn default_discount() -> f64 {
    0.99
}

fn default_init_scale() -> f64 {
    0.05
}

fn default_lookback() -> usize {
    20
}

fn default_conv_width() -> usize {
    5
}

fn default_grid() -> String {
    "full".into()
}

fn default_families() -> Vec<String> {
    vec!["ew".into(), "spo".into(), "mpo".into()]
}

fn default_seeds() -> u64 {
    10
}

fn default_mpo_horizon() -> usize {
    2
}

fn default_master_seed() -> u64 {
    42
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_noise_variance() -> f64 {
    0.02
}

fn default_returns_variance() -> f64 {
    0.005
}

fn default_forecast_horizon() -> usize {
    2
}

fn default_cost_a() -> f64 {
    0.0005
}

fn default_cost_b() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSection {
    /// Directory of per-asset CSVs (`date,open,high,low,close,volume`).
    pub assets_dir: String,
    /// Risk-free CSV (`date,rate`).
    pub risk_free: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSection {
    pub train_start: String,
    pub train_end: String,
    pub test_start: String,
    pub test_end: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostsSection {
    #[serde(default = "default_cost_a")]
    pub a: f64,
    #[serde(default = "default_cost_b")]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
}

impl Default for CostsSection {
    fn default() -> Self {
        Self { a: default_cost_a(), b: default_cost_b(), c: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastSection {
    #[serde(default = "default_noise_variance")]
    pub noise_variance: f64,
    #[serde(default = "default_returns_variance")]
    pub returns_variance: f64,
    #[serde(default = "default_forecast_horizon")]
    pub horizon: usize,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self {
            noise_variance: default_noise_variance(),
            returns_variance: default_returns_variance(),
            horizon: default_forecast_horizon(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskSection {
    #[serde(default = "default_covariance_window")]
    pub covariance_window: usize,
    /// Retained factors; omitted means `min(15, n - 1)`.
    #[serde(default)]
    pub factors: Option<usize>,
    #[serde(default = "default_baseline_days")]
    pub baseline_days: usize,
}

impl Default for RiskSection {
    fn default() -> Self {
        Self {
            covariance_window: default_covariance_window(),
            factors: None,
            baseline_days: default_baseline_days(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tolerance: default_tolerance(), max_iterations: default_max_iterations() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSection {
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_episode_length")]
    pub episode_length: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_grad_clip")]
    pub grad_clip: f64,
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default = "default_lookback")]
    pub lookback: usize,
    #[serde(default = "default_conv_width")]
    pub conv_width: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            episodes: default_episodes(),
            episode_length: default_episode_length(),
            learning_rate: default_learning_rate(),
            grad_clip: default_grad_clip(),
            discount: default_discount(),
            init_scale: default_init_scale(),
            lookback: default_lookback(),
            conv_width: default_conv_width(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSection {
    /// `full` (21 x 24) or `small` (7 x 6); explicit values override.
    #[serde(default = "default_grid")]
    pub grid: String,
    #[serde(default)]
    pub grid_risk: Option<Vec<f64>>,
    #[serde(default)]
    pub grid_trade: Option<Vec<f64>>,
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    /// Number of seeds; tasks use seeds `0..seeds`.
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default = "default_mpo_horizon")]
    pub mpo_horizon: usize,
    /// Concurrent tasks; 0 means one per core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            grid_risk: None,
            grid_trade: None,
            families: default_families(),
            seeds: default_seeds(),
            mpo_horizon: default_mpo_horizon(),
            jobs: 0,
            master_seed: default_master_seed(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

/// The full run configuration, one section per concern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSection,
    pub split: SplitSection,
    #[serde(default)]
    pub costs: CostsSection,
    #[serde(default)]
    pub forecast: ForecastSection,
    #[serde(default)]
    pub risk: RiskSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Validates field-level consistency and resolves derived values.
    /// Filesystem checks run here; panel-dependent checks live in
    /// [`diagnose`].
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedConfig, ConfigError> {
        let parse_date = |field: &'static str, value: &str| {
            NaiveDate::parse_from_str(value, "%Y-%m-%d")
                .map_err(|_| ConfigError::BadDate { field, value: value.to_string() })
        };
        let train_start = parse_date("split.train_start", &self.split.train_start)?;
        let train_end = parse_date("split.train_end", &self.split.train_end)?;
        let test_start = parse_date("split.test_start", &self.split.test_start)?;
        let test_end = parse_date("split.test_end", &self.split.test_end)?;
        if train_start >= train_end {
            return Err(ConfigError::BadTrainRange { train_start, train_end });
        }
        if test_start >= test_end {
            return Err(ConfigError::BadTestRange { test_start, test_end });
        }
        if test_start < train_end {
            return Err(ConfigError::OverlappingRanges { train_end, test_start });
        }

        let assets_dir = base_dir.join(&self.data.assets_dir);
        let risk_free = base_dir.join(&self.data.risk_free);
        if !assets_dir.exists() {
            return Err(ConfigError::MissingFile(assets_dir));
        }
        if !risk_free.exists() {
            return Err(ConfigError::MissingFile(risk_free));
        }

        let mut grid = match self.sweep.grid.as_str() {
            "full" => SweepGrid::full(),
            "small" => SweepGrid::small(),
            other => return Err(ConfigError::UnknownGrid(other.to_string())),
        };
        if let Some(risk) = &self.sweep.grid_risk {
            grid.risk_values = risk.clone();
        }
        if let Some(trade) = &self.sweep.grid_trade {
            grid.trade_values = trade.clone();
        }
        if grid.is_empty() {
            return Err(ConfigError::EmptyGrid);
        }
        if self.sweep.seeds == 0 {
            return Err(ConfigError::NoSeeds);
        }
        if self.sweep.families.is_empty() {
            return Err(ConfigError::NoFamilies);
        }
        let families = self
            .sweep
            .families
            .iter()
            .map(|name| {
                StrategyFamily::parse(name, self.sweep.mpo_horizon)
                    .ok_or_else(|| ConfigError::UnknownFamily(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let forecast = ForecastConfig::new(
            self.forecast.noise_variance,
            self.forecast.returns_variance,
            self.forecast.horizon,
        )?;
        let cost_params = crate::cost::CostParams::new(self.costs.a, self.costs.b, self.costs.c)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        Ok(ResolvedConfig {
            assets_dir,
            risk_free,
            train_start,
            train_end,
            test_start,
            test_end,
            cost_params,
            forecast,
            families,
            grid,
            seeds: (0..self.sweep.seeds).collect(),
            out_dir: base_dir.join(&self.output.dir),
            train_cfg: TrainConfig {
                episodes: self.training.episodes,
                episode_length: self.training.episode_length,
                learning_rate: self.training.learning_rate,
                grad_clip: self.training.grad_clip,
                discount: self.training.discount,
                init_scale: self.training.init_scale,
            },
        })
    }
}

/// Validated configuration with parsed dates and typed values.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub assets_dir: PathBuf,
    pub risk_free: PathBuf,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
    pub cost_params: crate::cost::CostParams,
    pub forecast: ForecastConfig,
    pub families: Vec<StrategyFamily>,
    pub grid: SweepGrid,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub train_cfg: TrainConfig,
}

impl ResolvedConfig {
    /// Panel index range covering `[start, end)` dates.
    pub fn date_range(panel: &PricePanel, start: NaiveDate, end: NaiveDate) -> std::ops::Range<usize> {
        let dates = panel.dates();
        let lo = dates.partition_point(|d| *d < start);
        let hi = dates.partition_point(|d| *d < end);
        lo..hi
    }

    pub fn train_range(&self, panel: &PricePanel) -> std::ops::Range<usize> {
        Self::date_range(panel, self.train_start, self.train_end)
    }

    pub fn test_range(&self, panel: &PricePanel) -> std::ops::Range<usize> {
        Self::date_range(panel, self.test_start, self.test_end)
    }
}

/// Severity of one diagnostic finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

/// Panel-dependent sanity checks: alignment, warm-up sufficiency, grid and
/// range sizes. Returns findings; an empty list means the run is sound.
pub fn diagnose(config: &RunConfig, resolved: &ResolvedConfig, panel: &PricePanel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let error = |message: String| Diagnostic { severity: Severity::Error, message };
    let warning = |message: String| Diagnostic { severity: Severity::Warning, message };

    let train = resolved.train_range(panel);
    let test = resolved.test_range(panel);
    if train.is_empty() {
        out.push(error("train range contains no trading dates".into()));
    }
    if test.is_empty() {
        out.push(error("test range contains no trading dates".into()));
    }
    if train.is_empty() || test.is_empty() {
        return out;
    }

    let needs_features = resolved
        .families
        .iter()
        .any(|f| matches!(f, StrategyFamily::Frontier { .. }));
    let baseline_needed = config.risk.baseline_days + crate::market::ROLLING_WINDOW;
    if needs_features && train.start < baseline_needed {
        out.push(error(format!(
            "insufficient warm-up for feature normalization: need {baseline_needed} trading days before the train start, have {}",
            train.start
        )));
    }

    let uses_risk = resolved
        .families
        .iter()
        .any(|f| !matches!(f, StrategyFamily::Ew));
    if uses_risk && test.start <= config.risk.covariance_window {
        out.push(error(format!(
            "insufficient warm-up for the covariance window: need {} trading days before the test start, have {}",
            config.risk.covariance_window + 1,
            test.start
        )));
    }
    if needs_features {
        let lookback_needed = config.training.lookback + 1;
        if train.start < lookback_needed {
            out.push(error(format!(
                "insufficient warm-up for the log-return lookback: need {lookback_needed} trading days before the train start, have {}",
                train.start
            )));
        }
        if uses_risk && train.start <= config.risk.covariance_window {
            out.push(warning(format!(
                "policy training starts before the covariance window fills ({} <= {}); early episode starts shift forward",
                train.start, config.risk.covariance_window
            )));
        }
        let train_days = train.len();
        if train_days < config.training.episode_length {
            out.push(error(format!(
                "train range has {train_days} days, shorter than one episode ({})",
                config.training.episode_length
            )));
        }
    }
    if resolved.grid.is_empty() {
        out.push(error("empty preference grid".into()));
    }
    if panel.n_risky() == 0 {
        out.push(error("panel has no risky assets".into()));
    }
    out
}
