//! Projected gradient ascent on products of probability simplices.

use super::simplex::project_to_simplex;
use super::{OptimizerError, ProblemInstance, TradePlan};

/// Default tolerance on the projected-gradient residual.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 10_000;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e4;

struct RunResult {
    weights: Vec<Vec<f64>>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn solve_from(
    problem: &ProblemInstance,
    start: Vec<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<RunResult, OptimizerError> {
    let h = problem.horizon();
    let dim = problem.dim();
    let mut weights: Vec<Vec<f64>> =
        start.iter().map(|block| project_to_simplex(block)).collect();
    let mut objective = problem.objective(&weights);
    if !objective.is_finite() {
        return Err(OptimizerError::NonFinite("objective"));
    }
    let mut grad = vec![vec![0.0; dim]; h];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        problem.gradient_into(&weights, &mut grad);

        // Residual of the fixed-point condition u = proj(u + g).
        let mut residual: f64 = 0.0;
        for tau in 0..h {
            let probe: Vec<f64> =
                weights[tau].iter().zip(&grad[tau]).map(|(u, g)| u + g).collect();
            let projected = project_to_simplex(&probe);
            for (p, u) in projected.iter().zip(&weights[tau]) {
                residual = residual.max((p - u).abs());
            }
        }
        if residual <= tol || problem.is_exchange_stationary(&weights, tol) {
            converged = true;
            break;
        }

        iterations += 1;
        let mut t = step;
        let mut accepted = false;
        while t >= MIN_STEP {
            let candidate: Vec<Vec<f64>> = (0..h)
                .map(|tau| {
                    let moved: Vec<f64> = weights[tau]
                        .iter()
                        .zip(&grad[tau])
                        .map(|(u, g)| u + t * g)
                        .collect();
                    project_to_simplex(&moved)
                })
                .collect();
            let dist2: f64 = candidate
                .iter()
                .zip(&weights)
                .flat_map(|(c, u)| c.iter().zip(u).map(|(a, b)| (a - b) * (a - b)))
                .sum();
            if dist2 == 0.0 {
                break;
            }
            let value = problem.objective(&candidate);
            if !value.is_finite() {
                return Err(OptimizerError::NonFinite("objective"));
            }
            if value >= objective + ARMIJO * dist2 / t {
                weights = candidate;
                objective = value;
                step = (t * 2.0).min(MAX_STEP);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No ascent step exists along this subgradient; the kink-aware
            // exchange test decides whether this is a stationary point.
            converged = problem.is_exchange_stationary(&weights, tol);
            break;
        }
    }

    Ok(RunResult { weights, objective, iterations, converged })
}

/// Maximizes the problem from three deterministic starts (hold, uniform,
/// all-cash) and returns the best plan found.
pub fn solve(
    problem: &ProblemInstance,
    tol: f64,
    max_iter: usize,
) -> Result<TradePlan, OptimizerError> {
    let h = problem.horizon();
    let dim = problem.dim();
    let hold = vec![problem.start_weights().to_vec(); h];
    let uniform = vec![vec![1.0 / dim as f64; dim]; h];
    let mut cash = vec![0.0; dim];
    cash[dim - 1] = 1.0;
    let cash = vec![cash; h];

    let mut best: Option<RunResult> = None;
    for start in [hold, uniform, cash] {
        let run = solve_from(problem, start, tol, max_iter)?;
        let better = match &best {
            None => true,
            Some(b) => run.objective > b.objective + 1e-15,
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");

    let mut trades = Vec::with_capacity(h);
    let mut prev = problem.start_weights().to_vec();
    for u in &best.weights {
        trades.push(u.iter().zip(&prev).map(|(a, b)| a - b).collect());
        prev = u.clone();
    }
    Ok(TradePlan {
        trades,
        objective_value: best.objective,
        iterations: best.iterations,
        converged: best.converged,
    })
}
