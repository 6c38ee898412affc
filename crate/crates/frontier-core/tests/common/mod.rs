//! Shared fixtures: synthetic markets and independent oracles.

#![allow(dead_code)]

use chrono::NaiveDate;
use frontier_core::market::PricePanel;
use frontier_core::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::sync::Arc;

/// Geometric drift + Gaussian noise market.
pub struct MarketSpec {
    pub n: usize,
    pub days: usize,
    pub drifts: Vec<f64>,
    pub vols: Vec<f64>,
    pub risk_free: f64,
    pub base_volume: f64,
    pub seed: u64,
}

impl MarketSpec {
    pub fn new(n: usize, days: usize, seed: u64) -> Self {
        Self {
            n,
            days,
            drifts: (0..n).map(|a| 0.0002 + 0.0001 * a as f64).collect(),
            vols: (0..n).map(|a| 0.01 + 0.002 * a as f64).collect(),
            risk_free: 0.0001,
            base_volume: 50.0,
            seed,
        }
    }

    pub fn flat(mut self) -> Self {
        self.drifts = vec![0.0; self.n];
        self
    }

    pub fn with_drifts(mut self, drifts: Vec<f64>) -> Self {
        assert_eq!(drifts.len(), self.n);
        self.drifts = drifts;
        self
    }

    pub fn with_vols(mut self, vols: Vec<f64>) -> Self {
        assert_eq!(vols.len(), self.n);
        self.vols = vols;
        self
    }

    pub fn with_risk_free(mut self, rf: f64) -> Self {
        self.risk_free = rf;
        self
    }

    pub fn build(&self) -> Arc<PricePanel> {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut close = Vec::with_capacity(self.n);
        let mut open = Vec::with_capacity(self.n);
        let mut high = Vec::with_capacity(self.n);
        let mut low = Vec::with_capacity(self.n);
        let mut volume = Vec::with_capacity(self.n);
        for a in 0..self.n {
            let mut rng = rng::stream(self.seed, &[0x5A17, a as u64]);
            let mut c = Vec::with_capacity(self.days);
            let mut o = Vec::with_capacity(self.days);
            let mut h = Vec::with_capacity(self.days);
            let mut l = Vec::with_capacity(self.days);
            let mut v = Vec::with_capacity(self.days);
            let mut price = 40.0 + 15.0 * a as f64;
            for _ in 0..self.days {
                let z: f64 = normal.sample(&mut rng);
                let intraday: f64 = normal.sample(&mut rng);
                let ret = (self.drifts[a] + self.vols[a] * z.clamp(-4.0, 4.0)).max(-0.5);
                let next = price * (1.0 + ret);
                let open_px = price * (1.0 + 0.2 * self.vols[a] * intraday.clamp(-4.0, 4.0));
                o.push(open_px.max(1e-6));
                c.push(next);
                h.push(next.max(open_px) * 1.001);
                l.push(next.min(open_px) * 0.999);
                v.push(self.base_volume * (1.0 + 0.3 * rng.gen_range(0.0..1.0)));
                price = next;
            }
            close.push(c);
            open.push(o);
            high.push(h);
            low.push(l);
            volume.push(v);
        }
        let dates: Vec<NaiveDate> = (0..self.days as u64)
            .map(|i| NaiveDate::from_ymd_opt(2016, 1, 4).unwrap() + chrono::Days::new(i))
            .collect();
        Arc::new(
            PricePanel::new(
                (0..self.n).map(|a| format!("SYN{a}")).collect(),
                dates,
                open,
                high,
                low,
                close,
                volume,
                vec![self.risk_free; self.days],
            )
            .unwrap(),
        )
    }
}

/// Panel with externally chosen close paths, for hand-computed
/// expectations. Opens sit 0.1% above the previous close so the intraday
/// volatility proxy never degenerates to zero.
pub fn panel_from_paths(closes: Vec<Vec<f64>>, volume: f64, risk_free: f64) -> Arc<PricePanel> {
    let n = closes.len();
    let days = closes[0].len();
    let dates: Vec<NaiveDate> = (0..days as u64)
        .map(|i| NaiveDate::from_ymd_opt(2019, 1, 1).unwrap() + chrono::Days::new(i))
        .collect();
    let mut open = Vec::with_capacity(n);
    for c in &closes {
        let mut o = vec![c[0] * 1.001];
        o.extend(c[..days - 1].iter().map(|px| px * 1.001));
        open.push(o);
    }
    Arc::new(
        PricePanel::new(
            (0..n).map(|a| format!("P{a}")).collect(),
            dates,
            open,
            closes.clone(),
            closes.clone(),
            closes,
            vec![vec![volume; days]; n],
            vec![risk_free; days],
        )
        .unwrap(),
    )
}

/// Independent evaluation of the mean-variance objective and exhaustive
/// simplex grid search, used as the solver oracle. Everything here
/// recomputes the objective from raw inputs: dense covariance, the explicit
/// cost formula, no shared code with the solver.
pub mod oracle {
    use rayon::prelude::*;

    /// Raw problem data for two risky assets plus cash.
    #[derive(Debug, Clone)]
    pub struct RawInstance {
        pub forecast_1: [f64; 3],
        pub forecast_2: [f64; 3],
        pub start: [f64; 3],
        /// Dense covariance including the zero cash row/column.
        pub cov: [[f64; 3]; 3],
        pub sigma_est: [f64; 2],
        pub volume_est: [f64; 2],
        pub value: f64,
        pub a: f64,
        pub b: f64,
        pub c: f64,
        pub gamma_risk: f64,
        pub gamma_trade: f64,
    }

    impl RawInstance {
        pub fn phi(&self, from: &[f64; 3], to: &[f64; 3]) -> f64 {
            let mut total = 0.0;
            for i in 0..2 {
                let z = to[i] - from[i];
                let abs = z.abs();
                total += self.a * abs
                    + self.b * self.sigma_est[i] * abs * abs.sqrt()
                        / (self.volume_est[i] / self.value).sqrt()
                    + self.c * z;
            }
            total
        }

        pub fn psi(&self, u: &[f64; 3]) -> f64 {
            let mut total = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    total += u[i] * self.cov[i][j] * u[j];
                }
            }
            total
        }

        fn dot(r: &[f64; 3], u: &[f64; 3]) -> f64 {
            r[0] * u[0] + r[1] * u[1] + r[2] * u[2]
        }

        pub fn eval_single(&self, u: &[f64; 3]) -> f64 {
            Self::dot(&self.forecast_1, u)
                - self.gamma_trade * self.phi(&self.start, u)
                - self.gamma_risk * self.psi(u)
        }

        pub fn eval_two_period(&self, u1: &[f64; 3], u2: &[f64; 3]) -> f64 {
            self.eval_single(u1) + Self::dot(&self.forecast_2, u2)
                - self.gamma_trade * self.phi(u1, u2)
                - self.gamma_risk * self.psi(u2)
        }
    }

    /// All points of the 3-slot probability simplex at spacing
    /// `1/resolution`.
    pub fn simplex_grid(resolution: usize) -> Vec<[f64; 3]> {
        let res = resolution as f64;
        let mut points = Vec::with_capacity((resolution + 1) * (resolution + 2) / 2);
        for i in 0..=resolution {
            for j in 0..=(resolution - i) {
                let k = resolution - i - j;
                points.push([i as f64 / res, j as f64 / res, k as f64 / res]);
            }
        }
        points
    }

    /// Exhaustive single-period optimum over the grid.
    pub fn grid_best_single(inst: &RawInstance, resolution: usize) -> ([f64; 3], f64) {
        let mut best = [0.0; 3];
        let mut best_value = f64::NEG_INFINITY;
        for u in simplex_grid(resolution) {
            let value = inst.eval_single(&u);
            if value > best_value {
                best_value = value;
                best = u;
            }
        }
        (best, best_value)
    }

    /// Exhaustive two-period optimum over the grid (nested search).
    pub fn grid_best_two_period(
        inst: &RawInstance,
        resolution: usize,
    ) -> ([f64; 3], [f64; 3], f64) {
        let points = simplex_grid(resolution);
        // Second-period terms that do not depend on the first period.
        let tail: Vec<f64> = points
            .iter()
            .map(|u| {
                inst.forecast_2[0] * u[0] + inst.forecast_2[1] * u[1] + inst.forecast_2[2] * u[2]
                    - inst.gamma_risk * inst.psi(u)
            })
            .collect();
        let scale = [
            inst.b * inst.sigma_est[0] / (inst.volume_est[0] / inst.value).sqrt(),
            inst.b * inst.sigma_est[1] / (inst.volume_est[1] / inst.value).sqrt(),
        ];
        let best = points
            .par_iter()
            .enumerate()
            .map(|(i1, u1)| {
                let head = inst.eval_single(u1);
                let mut best_value = f64::NEG_INFINITY;
                let mut best_i2 = 0;
                for (i2, u2) in points.iter().enumerate() {
                    let mut phi = 0.0;
                    for i in 0..2 {
                        let z = u2[i] - u1[i];
                        let abs = z.abs();
                        phi += inst.a * abs + scale[i] * abs * abs.sqrt() + inst.c * z;
                    }
                    let value = tail[i2] - inst.gamma_trade * phi;
                    if value > best_value {
                        best_value = value;
                        best_i2 = i2;
                    }
                }
                (head + best_value, i1, best_i2)
            })
            .reduce(
                || (f64::NEG_INFINITY, 0, 0),
                |a, b| if b.0 > a.0 { b } else { a },
            );
        (points[best.1], points[best.2], best.0)
    }
}

/// Random well-conditioned solver instances: enough curvature that the grid
/// argmax pins down the continuum argmax, cost scales matching the paper's
/// settings.
pub fn random_solver_instance(rng: &mut impl Rng) -> oracle::RawInstance {
    let v0: f64 = rng.gen_range(0.01..0.025);
    let v1: f64 = rng.gen_range(0.01..0.025);
    let rho: f64 = rng.gen_range(-0.5..0.5);
    let ridge = 1.5e-4;
    let mut cov = [[0.0; 3]; 3];
    cov[0][0] = v0 * v0 + ridge;
    cov[1][1] = v1 * v1 + ridge;
    cov[0][1] = rho * v0 * v1;
    cov[1][0] = cov[0][1];
    let rf = rng.gen_range(0.0..2e-4);
    let mut raw = [0.0f64; 3];
    for w in raw.iter_mut() {
        *w = rng.gen_range(0.05..1.0);
    }
    let total: f64 = raw.iter().sum();
    oracle::RawInstance {
        forecast_1: [rng.gen_range(-0.015..0.015), rng.gen_range(-0.015..0.015), rf],
        forecast_2: [rng.gen_range(-0.015..0.015), rng.gen_range(-0.015..0.015), rf],
        start: [raw[0] / total, raw[1] / total, raw[2] / total],
        cov,
        sigma_est: [rng.gen_range(0.005..0.02), rng.gen_range(0.005..0.02)],
        volume_est: [rng.gen_range(1.0..10.0), rng.gen_range(1.0..10.0)],
        value: 1.0,
        a: rng.gen_range(0.0..5e-4),
        b: rng.gen_range(0.0..1.0),
        c: rng.gen_range(-1e-4..1e-4),
        gamma_risk: (rng.gen_range(20.0f64.ln()..200.0f64.ln())).exp(),
        gamma_trade: rng.gen_range(0.1..5.0),
    }
}

/// Builds the solver-side problem from the oracle's raw data.
pub fn instance_to_problem(
    inst: &oracle::RawInstance,
    horizon: usize,
) -> frontier_core::optimizer::ProblemInstance {
    use frontier_core::optimizer::{build_mpo, ConstraintSet, CostEstimates};
    use frontier_core::portfolio::{InvestorPreferences, PortfolioState};
    use frontier_core::risk::fit_factor_model;
    use nalgebra::DMatrix;

    let cov = DMatrix::from_fn(3, 3, |i, j| inst.cov[i][j]);
    let risk = Arc::new(fit_factor_model(&cov, 3).unwrap());
    let state = PortfolioState::new(inst.start.to_vec(), inst.value, vec![0.0; 3]).unwrap();
    let forecasts: Vec<Vec<f64>> = match horizon {
        1 => vec![inst.forecast_1.to_vec()],
        2 => vec![inst.forecast_1.to_vec(), inst.forecast_2.to_vec()],
        _ => unreachable!("two-period instances only"),
    };
    build_mpo(
        &forecasts,
        &state,
        risk,
        CostEstimates { sigma: inst.sigma_est.to_vec(), volume: inst.volume_est.to_vec() },
        frontier_core::cost::CostParams::new(inst.a, inst.b, inst.c).unwrap(),
        InvestorPreferences::new(inst.gamma_risk, inst.gamma_trade).unwrap(),
        &ConstraintSet::default(),
        horizon,
    )
    .unwrap()
}
