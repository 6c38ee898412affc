//! Investor-preference sweeps across strategy families and seeds.
//!
//! One task = one (preference pair, seed): policy-gradient strategies
//! retrain from scratch with the preferences baked into their reward, the
//! convex strategies re-solve day by day, and the equal-weight baseline runs
//! once since it ignores preferences. Tasks are independent and run on the
//! ambient rayon pool; results come back in deterministic grid order no
//! matter how they were scheduled.

mod pareto;

pub use pareto::{mean_frontier, pareto_filter, MeanFrontier, ParetoFrontier};

use crate::backtest::{run_backtest, ew_strategy, MeanVarianceStrategy, PolicyStrategy, Strategy};
use crate::cost::CostParams;
use crate::dataset::{Dataset, DatasetConfig, DatasetError};
use crate::market::{ForecastConfig, PricePanel};
use crate::policy::{train, Architecture, PolicyNetwork, PolicyVariant, TrainConfig};
use crate::portfolio::{InvestorPreferences, PortfolioState};
use crate::rng;
use rayon::prelude::*;
use std::ops::Range;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("no points to filter")]
    EmptyInput,
    #[error("non-finite frontier point (risk {risk}, return {ret})")]
    NonFinitePoint { risk: f64, ret: f64 },
    #[error("need at least two seed frontiers, got {0}")]
    TooFewSeeds(usize),
    #[error("disjoint support: risk ranges do not overlap (lo {lo} > hi {hi})")]
    DisjointSupport { lo: f64, hi: f64 },
    #[error("sweep produced no successful points")]
    AllTasksFailed,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Strategy family swept over the preference grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyFamily {
    Ew,
    Spo,
    Mpo { horizon: usize },
    Frontier { variant: PolicyVariant },
}

impl StrategyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyFamily::Ew => "ew",
            StrategyFamily::Spo => "spo",
            StrategyFamily::Mpo { .. } => "mpo",
            StrategyFamily::Frontier { .. } => "frontier",
        }
    }

    /// Sub-variant column for reports; empty when the family has none.
    pub fn variant_name(&self) -> &'static str {
        match self {
            StrategyFamily::Frontier { variant } => variant.name(),
            _ => "",
        }
    }

    /// Full identifier, e.g. `frontier-log-returns`.
    pub fn id(&self) -> String {
        match self {
            StrategyFamily::Frontier { variant } => format!("frontier-{}", variant.name()),
            other => other.name().to_string(),
        }
    }

    /// Parses `ew`, `spo`, `mpo`, or `frontier-<variant>`; `mpo_horizon`
    /// supplies the plan length for `mpo`.
    pub fn parse(s: &str, mpo_horizon: usize) -> Option<Self> {
        match s {
            "ew" => Some(StrategyFamily::Ew),
            "spo" => Some(StrategyFamily::Spo),
            "mpo" => Some(StrategyFamily::Mpo { horizon: mpo_horizon }),
            other => {
                let variant = other.strip_prefix("frontier-")?;
                PolicyVariant::parse(variant).map(|variant| StrategyFamily::Frontier { variant })
            }
        }
    }

    /// Preference-dependent families produce one point per grid pair;
    /// preference-free families collapse to a single point.
    pub fn uses_preferences(&self) -> bool {
        !matches!(self, StrategyFamily::Ew)
    }

    fn tag(&self) -> u64 {
        match self {
            StrategyFamily::Ew => 0,
            StrategyFamily::Spo => 1,
            StrategyFamily::Mpo { .. } => 2,
            StrategyFamily::Frontier { variant } => 0x10 + variant.tag() as u64,
        }
    }
}

/// The investor-preference grid.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub risk_values: Vec<f64>,
    pub trade_values: Vec<f64>,
}

impl SweepGrid {
    /// The full 21 x 24 = 504 pair grid.
    pub fn full() -> Self {
        Self {
            risk_values: vec![
                0.1, 0.178, 0.316, 0.562, 1.0, 2.0, 3.0, 6.0, 10.0, 18.0, 32.0, 56.0, 100.0,
                178.0, 316.0, 562.0, 1000.0, 2000.0, 5000.0, 10000.0, 20000.0,
            ],
            trade_values: vec![
                0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0, 9.0, 10.0, 11.0,
                12.0, 15.0, 20.0, 30.0, 45.0, 60.0, 100.0, 200.0,
            ],
        }
    }

    /// A coarse 7 x 6 sub-grid spanning the same preference ranges, for
    /// desk-scale runs.
    pub fn small() -> Self {
        Self {
            risk_values: vec![0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0, 20000.0],
            trade_values: vec![0.1, 1.0, 5.0, 10.0, 50.0, 200.0],
        }
    }

    pub fn len(&self) -> usize {
        self.risk_values.len() * self.trade_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cross product, risk-major.
    pub fn pairs(&self) -> Vec<InvestorPreferences> {
        let mut out = Vec::with_capacity(self.len());
        for &risk in &self.risk_values {
            for &trade in &self.trade_values {
                out.push(InvestorPreferences { gamma_risk: risk, gamma_trade: trade });
            }
        }
        out
    }
}

/// One backtest outcome in risk-return space.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub family: StrategyFamily,
    pub prefs: InvestorPreferences,
    pub seed: u64,
    pub excess_risk: f64,
    pub excess_return: f64,
    pub sharpe: Option<f64>,
}

/// A task that failed, annotated with its grid coordinates.
#[derive(Debug, Clone)]
pub struct TaskFailure {
    pub family: String,
    pub gamma_risk: f64,
    pub gamma_trade: f64,
    pub seed: u64,
    pub message: String,
}

/// Everything a sweep needs besides the grid and seeds.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub panel: Arc<PricePanel>,
    /// Panel index range of training dates.
    pub train_range: Range<usize>,
    /// Panel index range of test dates.
    pub test_range: Range<usize>,
    pub cost_params: CostParams,
    pub forecast: ForecastConfig,
    pub covariance_window: usize,
    pub factor_count: Option<usize>,
    pub baseline_days: usize,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub train_cfg: TrainConfig,
    /// Plan length for the multi-period family.
    pub mpo_horizon: usize,
    /// Policy-network lookback window.
    pub lookback: usize,
    /// Policy-network convolution width.
    pub conv_width: usize,
    pub master_seed: u64,
}

impl SweepSetup {
    pub fn new(
        panel: Arc<PricePanel>,
        train_range: Range<usize>,
        test_range: Range<usize>,
        cost_params: CostParams,
        forecast: ForecastConfig,
        master_seed: u64,
    ) -> Self {
        Self {
            panel,
            train_range,
            test_range,
            cost_params,
            forecast,
            covariance_window: crate::risk::DEFAULT_COVARIANCE_WINDOW,
            factor_count: None,
            baseline_days: 30,
            solver_tol: crate::optimizer::DEFAULT_TOL,
            solver_max_iter: crate::optimizer::DEFAULT_MAX_ITER,
            train_cfg: TrainConfig::default(),
            mpo_horizon: 2,
            lookback: 20,
            conv_width: 5,
            master_seed,
        }
    }

    fn dataset_config(&self, seed: u64) -> DatasetConfig {
        DatasetConfig {
            covariance_window: self.covariance_window,
            factor_count: self.factor_count,
            baseline_days: self.baseline_days,
            train_start: self.train_range.start,
            forecast: self.forecast,
            seed: rng::derive_seed(self.master_seed, &[0xDA7A, seed]),
        }
    }
}

/// Sweep result: successful points in deterministic grid order, plus any
/// failed tasks.
#[derive(Debug)]
pub struct SweepOutcome {
    pub points: Vec<FrontierPoint>,
    pub failures: Vec<TaskFailure>,
}

fn run_task(
    family: StrategyFamily,
    setup: &SweepSetup,
    data: &Dataset,
    prefs: InvestorPreferences,
    pair_index: usize,
    seed: u64,
) -> Result<FrontierPoint, String> {
    let n_total = setup.panel.n_total();
    let initial = PortfolioState::all_cash(n_total, 1.0).map_err(|e| e.to_string())?;
    let mut strategy: Box<dyn Strategy> = match family {
        StrategyFamily::Ew => Box::new(ew_strategy()),
        StrategyFamily::Spo => {
            let mut s = MeanVarianceStrategy::new(prefs, setup.cost_params, 1);
            s.tol = setup.solver_tol;
            s.max_iter = setup.solver_max_iter;
            Box::new(s)
        }
        StrategyFamily::Mpo { horizon } => {
            let mut s = MeanVarianceStrategy::new(prefs, setup.cost_params, horizon);
            s.tol = setup.solver_tol;
            s.max_iter = setup.solver_max_iter;
            Box::new(s)
        }
        StrategyFamily::Frontier { variant } => {
            let arch = Architecture {
                variant,
                n_risky: setup.panel.n_risky(),
                lookback: setup.lookback,
                conv_width: setup.conv_width,
                k_maps: setup.panel.n_total(),
                horizon: setup.forecast.horizon,
            };
            let mut stream = rng::stream(
                setup.master_seed,
                &[0x7EA1, family.tag(), pair_index as u64, seed],
            );
            let net = PolicyNetwork::init_random(arch, setup.train_cfg.init_scale, &mut stream)
                .map_err(|e| e.to_string())?;
            let trained = train(
                net,
                data,
                setup.train_range.clone(),
                &prefs,
                &setup.cost_params,
                &setup.train_cfg,
                &mut stream,
            )
            .map_err(|e| e.to_string())?;
            Box::new(PolicyStrategy { net: trained })
        }
    };
    let result = run_backtest(
        strategy.as_mut(),
        data,
        setup.test_range.clone(),
        &setup.cost_params,
        initial,
    )
    .map_err(|e| e.to_string())?;
    Ok(FrontierPoint {
        family,
        prefs,
        seed,
        excess_risk: result.summary.excess_risk,
        excess_return: result.summary.excess_return,
        sharpe: result.summary.sharpe,
    })
}

/// Runs `family` over every (pair, seed) combination. Preference-free
/// families collapse to a single task. Tasks run on the ambient rayon pool.
pub fn run_sweep(
    family: StrategyFamily,
    setup: &SweepSetup,
    grid: &SweepGrid,
    seeds: &[u64],
) -> Result<SweepOutcome, SweepError> {
    let seeds: Vec<u64> = if seeds.is_empty() { vec![0] } else { seeds.to_vec() };
    let datasets: Vec<Arc<Dataset>> = seeds
        .iter()
        .map(|&s| {
            Dataset::prepare(setup.panel.clone(), setup.dataset_config(s)).map(Arc::new)
        })
        .collect::<Result<_, _>>()?;

    let tasks: Vec<(usize, InvestorPreferences, usize)> = if family.uses_preferences() {
        let pairs = grid.pairs();
        let mut tasks = Vec::with_capacity(pairs.len() * seeds.len());
        for (pair_index, prefs) in pairs.into_iter().enumerate() {
            for seed_index in 0..seeds.len() {
                tasks.push((pair_index, prefs, seed_index));
            }
        }
        tasks
    } else {
        // One representative task; the outcome is preference-independent.
        vec![(0, InvestorPreferences::neutral(), 0)]
    };

    let results: Vec<Result<FrontierPoint, TaskFailure>> = tasks
        .par_iter()
        .map(|&(pair_index, prefs, seed_index)| {
            let seed = seeds[seed_index];
            run_task(family, setup, &datasets[seed_index], prefs, pair_index, seed).map_err(
                |message| TaskFailure {
                    family: family.id(),
                    gamma_risk: prefs.gamma_risk,
                    gamma_trade: prefs.gamma_trade,
                    seed,
                    message,
                },
            )
        })
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(p) => points.push(p),
            Err(f) => failures.push(f),
        }
    }
    if points.is_empty() {
        return Err(SweepError::AllTasksFailed);
    }
    Ok(SweepOutcome { points, failures })
}

/// Splits sweep points by seed and extracts one Pareto frontier per seed.
pub fn frontiers_by_seed(points: &[FrontierPoint]) -> Result<Vec<ParetoFrontier>, SweepError> {
    let mut seeds: Vec<u64> = points.iter().map(|p| p.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds
        .into_iter()
        .map(|seed| {
            let subset: Vec<FrontierPoint> =
                points.iter().filter(|p| p.seed == seed).cloned().collect();
            pareto_filter(&subset)
        })
        .collect()
}
