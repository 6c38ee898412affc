//! Pareto extraction and cross-seed frontier averaging.

use super::{FrontierPoint, SweepError};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Non-dominated set in (excess risk, excess return) space, sorted by risk
/// ascending with strictly increasing return.
#[derive(Debug, Clone)]
pub struct ParetoFrontier {
    points: Vec<FrontierPoint>,
}

impl ParetoFrontier {
    pub fn points(&self) -> &[FrontierPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Inclusive risk span covered by the frontier.
    pub fn risk_range(&self) -> (f64, f64) {
        (
            self.points.first().expect("non-empty frontier").excess_risk,
            self.points.last().expect("non-empty frontier").excess_risk,
        )
    }

    /// Piecewise-linear interpolation of excess return at `risk`, clamped to
    /// the frontier's endpoints.
    pub fn interpolate(&self, risk: f64) -> f64 {
        let pts = &self.points;
        if risk <= pts[0].excess_risk {
            return pts[0].excess_return;
        }
        if risk >= pts[pts.len() - 1].excess_risk {
            return pts[pts.len() - 1].excess_return;
        }
        let mut hi = 1;
        while pts[hi].excess_risk < risk {
            hi += 1;
        }
        let lo = hi - 1;
        let (x0, y0) = (pts[lo].excess_risk, pts[lo].excess_return);
        let (x1, y1) = (pts[hi].excess_risk, pts[hi].excess_return);
        if x1 == x0 {
            return y0.max(y1);
        }
        y0 + (y1 - y0) * (risk - x0) / (x1 - x0)
    }
}

/// Keeps exactly the non-dominated points: no other point has lower-or-equal
/// risk and higher-or-equal return with at least one strict. Exact
/// duplicates keep the first occurrence in input order.
pub fn pareto_filter(points: &[FrontierPoint]) -> Result<ParetoFrontier, SweepError> {
    if points.is_empty() {
        return Err(SweepError::EmptyInput);
    }
    if let Some(p) = points.iter().find(|p| !p.excess_risk.is_finite() || !p.excess_return.is_finite())
    {
        return Err(SweepError::NonFinitePoint {
            risk: p.excess_risk,
            ret: p.excess_return,
        });
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Risk ascending; ties by return descending; stable on input order.
    order.sort_by(|&i, &j| {
        points[i]
            .excess_risk
            .partial_cmp(&points[j].excess_risk)
            .expect("finite")
            .then(points[j].excess_return.partial_cmp(&points[i].excess_return).expect("finite"))
    });
    let mut kept = Vec::new();
    let mut best_return = f64::NEG_INFINITY;
    for idx in order {
        if points[idx].excess_return > best_return {
            best_return = points[idx].excess_return;
            kept.push(points[idx].clone());
        }
    }
    Ok(ParetoFrontier { points: kept })
}

/// Mean frontier over seeds with a two-sided 95% Student-t band.
#[derive(Debug, Clone)]
pub struct MeanFrontier {
    /// Common excess-risk abscissae spanning the seeds' shared range.
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Number of seed frontiers averaged.
    pub seeds: usize,
}

/// Interpolates each seed's frontier onto a common risk grid over the
/// intersection of their ranges and averages pointwise; the confidence band
/// uses `seeds - 1` degrees of freedom.
pub fn mean_frontier(
    frontiers: &[ParetoFrontier],
    grid_resolution: usize,
) -> Result<MeanFrontier, SweepError> {
    if frontiers.len() < 2 {
        return Err(SweepError::TooFewSeeds(frontiers.len()));
    }
    if frontiers.iter().any(|f| f.is_empty()) {
        return Err(SweepError::EmptyInput);
    }
    let lo = frontiers.iter().map(|f| f.risk_range().0).fold(f64::NEG_INFINITY, f64::max);
    let hi = frontiers.iter().map(|f| f.risk_range().1).fold(f64::INFINITY, f64::min);
    if lo > hi {
        return Err(SweepError::DisjointSupport { lo, hi });
    }
    let count = if lo == hi { 1 } else { grid_resolution.max(2) };
    let grid: Vec<f64> = (0..count)
        .map(|i| {
            if count == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect();

    let m = frontiers.len() as f64;
    let df = m - 1.0;
    let t_crit = StudentsT::new(0.0, 1.0, df).expect("df >= 1").inverse_cdf(0.975);
    let mut mean = Vec::with_capacity(grid.len());
    let mut ci_low = Vec::with_capacity(grid.len());
    let mut ci_high = Vec::with_capacity(grid.len());
    for &x in &grid {
        let values: Vec<f64> = frontiers.iter().map(|f| f.interpolate(x)).collect();
        let mu = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / df;
        let half = t_crit * (var / m).sqrt();
        mean.push(mu);
        ci_low.push(mu - half);
        ci_high.push(mu + half);
    }
    Ok(MeanFrontier { grid, mean, ci_low, ci_high, seeds: frontiers.len() })
}
