//! Command implementations.

use crate::CommonArgs;
use anyhow::{anyhow, bail, Context, Result};
use frontier_core::backtest::{
    ew_strategy, run_backtest, MeanVarianceStrategy, PolicyStrategy, Strategy,
};
use frontier_core::config::{diagnose, ResolvedConfig, RunConfig, Severity};
use frontier_core::dataset::Dataset;
use frontier_core::market::{load_panel_from_dir, PricePanel};
use frontier_core::policy::{train, Architecture, PolicyNetwork};
use frontier_core::portfolio::{InvestorPreferences, PortfolioState};
use frontier_core::report;
use frontier_core::rng;
use frontier_core::sweep::{
    frontiers_by_seed, mean_frontier, pareto_filter, run_sweep, FrontierPoint, StrategyFamily,
    SweepSetup,
};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

/// Master-seed environment variable.
const SEED_ENV: &str = "FRONTIER_SEED";

struct Loaded {
    config: RunConfig,
    resolved: ResolvedConfig,
}

fn load_config(common: &CommonArgs) -> Result<Loaded> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("--config is required for this command"))?;
    let mut config = RunConfig::load(path)?;

    // Flag and environment overrides win over the file.
    if let Some(families) = &common.families {
        config.sweep.families = families.clone();
    }
    if let Some(seeds) = common.seeds {
        config.sweep.seeds = seeds;
    }
    if let Some(grid) = &common.grid {
        config.sweep.grid = grid.clone();
    }
    if let Some(jobs) = common.jobs {
        config.sweep.jobs = jobs;
    }
    if let Some(out) = &common.out {
        config.output.dir = out.to_string_lossy().into_owned();
    }
    if let Ok(value) = std::env::var(SEED_ENV) {
        config.sweep.master_seed = value
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an integer, got {value:?}"))?;
    }

    let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let resolved = config.resolve(&base_dir)?;
    if config.sweep.jobs > 0 {
        // Ignore the error if a pool already exists (tests, repeated calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.sweep.jobs)
            .build_global();
    }
    Ok(Loaded { config, resolved })
}

fn load_panel(resolved: &ResolvedConfig) -> Result<Arc<PricePanel>> {
    let last = resolved
        .test_end
        .pred_opt()
        .ok_or_else(|| anyhow!("test end date out of range"))?;
    let panel = load_panel_from_dir(&resolved.assets_dir, &resolved.risk_free, (None, Some(last)))?;
    Ok(Arc::new(panel))
}

fn build_setup(loaded: &Loaded, panel: Arc<PricePanel>) -> SweepSetup {
    let config = &loaded.config;
    let resolved = &loaded.resolved;
    let mut setup = SweepSetup::new(
        panel.clone(),
        resolved.train_range(&panel),
        resolved.test_range(&panel),
        resolved.cost_params,
        resolved.forecast,
        config.sweep.master_seed,
    );
    setup.covariance_window = config.risk.covariance_window;
    setup.factor_count = config.risk.factors;
    setup.baseline_days = config.risk.baseline_days;
    setup.solver_tol = config.solver.tolerance;
    setup.solver_max_iter = config.solver.max_iterations;
    setup.train_cfg = resolved.train_cfg;
    setup.mpo_horizon = config.sweep.mpo_horizon;
    setup.lookback = config.training.lookback;
    setup.conv_width = config.training.conv_width;
    setup
}

fn prepare_out_dir(loaded: &Loaded) -> Result<PathBuf> {
    let dir = &loaded.resolved.out_dir;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    // The resolved configuration rides along with every run's outputs.
    std::fs::write(dir.join("config.toml"), loaded.config.to_toml_string())?;
    Ok(dir.clone())
}

pub fn validate(common: &CommonArgs) -> Result<ExitCode> {
    let loaded = load_config(common)?;
    let panel = match load_panel(&loaded.resolved) {
        Ok(panel) => panel,
        Err(err) => {
            println!("error: {err:#}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let findings = diagnose(&loaded.config, &loaded.resolved, &panel);
    let mut errors = 0;
    for finding in &findings {
        match finding.severity {
            Severity::Error => {
                errors += 1;
                println!("error: {}", finding.message);
            }
            Severity::Warning => println!("warning: {}", finding.message),
        }
    }
    if errors == 0 {
        println!(
            "OK ({} assets, {} trading dates, train {} days, test {} days)",
            panel.n_risky(),
            panel.n_dates(),
            loaded.resolved.train_range(&panel).len(),
            loaded.resolved.test_range(&panel).len()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

pub fn backtest(
    common: &CommonArgs,
    gamma_risk: f64,
    gamma_trade: f64,
    seed: u64,
) -> Result<ExitCode> {
    let loaded = load_config(common)?;
    let panel = load_panel(&loaded.resolved)?;
    let setup = build_setup(&loaded, panel.clone());
    let out_dir = prepare_out_dir(&loaded)?;
    let prefs = InvestorPreferences::new(gamma_risk, gamma_trade)
        .map_err(|e| anyhow!(e.to_string()))?;
    let data = Dataset::prepare(panel.clone(), dataset_config(&setup, seed))?;

    for family in &loaded.resolved.families {
        let id = family.id();
        let mut strategy = make_strategy(*family, &setup, &data, prefs, seed, Some(&out_dir))?;
        let initial = PortfolioState::all_cash(panel.n_total(), 1.0)
            .map_err(|e| anyhow!(e.to_string()))?;
        let result = run_backtest(
            strategy.as_mut(),
            &data,
            setup.test_range.clone(),
            &setup.cost_params,
            initial,
        )
        .with_context(|| format!("backtest failed for {id}"))?;
        let csv = File::create(out_dir.join(format!("backtest-{id}.csv")))?;
        report::write_backtest_csv(csv, panel.assets(), &result)?;
        let summary = File::create(out_dir.join(format!("summary-{id}.csv")))?;
        report::write_summary_csv(summary, &id, &result.summary)?;
        println!(
            "{id}: excess return {:.6}/day, excess risk {:.6}/day, sharpe {}",
            result.summary.excess_return,
            result.summary.excess_risk,
            result
                .summary
                .sharpe
                .map(|s| format!("{s:.4}"))
                .unwrap_or_else(|| "undefined".into())
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn dataset_config(setup: &SweepSetup, seed: u64) -> frontier_core::dataset::DatasetConfig {
    frontier_core::dataset::DatasetConfig {
        covariance_window: setup.covariance_window,
        factor_count: setup.factor_count,
        baseline_days: setup.baseline_days,
        train_start: setup.train_range.start,
        forecast: setup.forecast,
        seed: rng::derive_seed(setup.master_seed, &[0xDA7A, seed]),
    }
}

/// Builds a ready-to-run strategy; policy families train first and persist
/// their parameters when an output directory is given.
fn make_strategy(
    family: StrategyFamily,
    setup: &SweepSetup,
    data: &Dataset,
    prefs: InvestorPreferences,
    seed: u64,
    save_dir: Option<&Path>,
) -> Result<Box<dyn Strategy>> {
    Ok(match family {
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
            let mut stream = rng::stream(setup.master_seed, &[0xBACC, seed]);
            let net = PolicyNetwork::init_random(arch, setup.train_cfg.init_scale, &mut stream)
                .map_err(|e| anyhow!(e.to_string()))?;
            let trained = train(
                net,
                data,
                setup.train_range.clone(),
                &prefs,
                &setup.cost_params,
                &setup.train_cfg,
                &mut stream,
            )
            .map_err(|e| anyhow!("training failed: {e}"))?;
            if let Some(dir) = save_dir {
                trained.save(&dir.join(format!("policy-{}.bin", family.id())))?;
            }
            Box::new(PolicyStrategy { net: trained })
        }
    })
}

pub fn sweep(common: &CommonArgs) -> Result<ExitCode> {
    let loaded = load_config(common)?;
    let panel = load_panel(&loaded.resolved)?;
    let setup = build_setup(&loaded, panel);
    let out_dir = prepare_out_dir(&loaded)?;
    let grid = &loaded.resolved.grid;
    let seeds = &loaded.resolved.seeds;

    let mut all_failures = Vec::new();
    let mut svg_input: Vec<(String, Vec<FrontierPoint>)> = Vec::new();
    for family in &loaded.resolved.families {
        let id = family.id();
        let outcome = run_sweep(*family, &setup, grid, seeds)
            .with_context(|| format!("sweep failed for {id}"))?;
        let points_file = File::create(out_dir.join(format!("points-{id}.csv")))?;
        report::write_points_csv(points_file, &outcome.points)?;

        let frontiers = frontiers_by_seed(&outcome.points)?;
        // Per-seed Pareto points, concatenated, for inspection.
        let pareto_points: Vec<FrontierPoint> =
            frontiers.iter().flat_map(|f| f.points().iter().cloned()).collect();
        let pareto_file = File::create(out_dir.join(format!("pareto-{id}.csv")))?;
        report::write_points_csv(pareto_file, &pareto_points)?;
        if frontiers.len() >= 2 {
            let mean = mean_frontier(&frontiers, 100)?;
            let mean_file = File::create(out_dir.join(format!("mean-{id}.csv")))?;
            report::write_mean_frontier_csv(mean_file, &id, &mean)?;
        }
        println!(
            "{id}: {} points, {} failed tasks",
            outcome.points.len(),
            outcome.failures.len()
        );
        all_failures.extend(outcome.failures);
        svg_input.push((id, outcome.points));
    }
    std::fs::write(out_dir.join("frontier.svg"), report::render_frontier_svg(&svg_input))?;

    if all_failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        let failures_file = File::create(out_dir.join("failures.csv"))?;
        report::write_failures_csv(failures_file, &all_failures)?;
        eprintln!("{} tasks failed:", all_failures.len());
        for f in &all_failures {
            eprintln!(
                "  {} gamma_risk={} gamma_trade={} seed={}: {}",
                f.family, f.gamma_risk, f.gamma_trade, f.seed, f.message
            );
        }
        Ok(ExitCode::from(2))
    }
}

pub fn frontier(points_files: &[PathBuf], out: &Path) -> Result<ExitCode> {
    let mut all_points = Vec::new();
    for path in points_files {
        let file = File::open(path)
            .with_context(|| format!("cannot open points file {}", path.display()))?;
        all_points.extend(report::read_points_csv(file)?);
    }
    if all_points.is_empty() {
        bail!("no points found in the given files");
    }
    std::fs::create_dir_all(out)?;

    let mut family_ids: Vec<String> = all_points.iter().map(|p| p.family.id()).collect();
    family_ids.sort();
    family_ids.dedup();

    let mut svg_input = Vec::new();
    for id in &family_ids {
        let subset: Vec<FrontierPoint> =
            all_points.iter().filter(|p| &p.family.id() == id).cloned().collect();
        let frontiers = frontiers_by_seed(&subset)?;
        let pareto_points: Vec<FrontierPoint> =
            frontiers.iter().flat_map(|f| f.points().iter().cloned()).collect();
        let pareto_file = File::create(out.join(format!("pareto-{id}.csv")))?;
        report::write_points_csv(pareto_file, &pareto_points)?;
        if frontiers.len() >= 2 {
            let mean = mean_frontier(&frontiers, 100)?;
            let mean_file = File::create(out.join(format!("mean-{id}.csv")))?;
            report::write_mean_frontier_csv(mean_file, id, &mean)?;
        }
        let single_seed_frontier = pareto_filter(&subset)?;
        println!(
            "{id}: {} points, pooled frontier of {} points",
            subset.len(),
            single_seed_frontier.len()
        );
        svg_input.push((id.clone(), subset));
    }
    std::fs::write(out.join("frontier.svg"), report::render_frontier_svg(&svg_input))?;
    Ok(ExitCode::SUCCESS)
}
