//! Research engine for daily portfolio rebalancing strategies.
//!
//! The crate simulates daily rebalancing of a portfolio of `n` risky assets
//! plus one cash slot under a non-linear transaction-cost model, and compares
//! strategy families across the investor-preference plane:
//!
//! - single-period and multi-period convex mean-variance programs solved by
//!   projected gradient ascent on the simplex ([`optimizer`]),
//! - a preference-aware policy-gradient allocator with three softmax policy
//!   networks ([`policy`]),
//! - an equal-weight baseline ([`backtest::ew_strategy`]).
//!
//! Each (risk aversion, trade aversion) pair yields one backtest and one
//! point in excess-risk/excess-return space; [`sweep`] runs the grid, extracts
//! Pareto optimal frontiers, and averages them across seeds with Student-t
//! confidence bands.
//!
//! Everything is deterministic given a master seed: forecast noise is derived
//! per (asset, date), training streams per (preference pair, seed), so sweep
//! results do not depend on task scheduling.

pub mod backtest;
pub mod config;
pub mod cost;
pub mod dataset;
pub mod market;
pub mod metrics;
pub mod optimizer;
pub mod policy;
pub mod portfolio;
pub mod report;
pub mod risk;
pub mod rng;
pub mod sweep;

pub use cost::CostParams;
pub use market::{ForecastConfig, PricePanel, ReturnsPanel};
pub use metrics::PerformanceSummary;
pub use portfolio::{InvestorPreferences, PortfolioState};
pub use risk::FactorRiskModel;
