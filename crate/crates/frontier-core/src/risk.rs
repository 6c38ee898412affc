//! Factor-model covariance estimation and the quadratic risk function.
//!
//! The asset-return covariance is estimated from a trailing window, then
//! compressed into a rank-`k` factor structure `F * diag(lambda) * F' + D`
//! built from the leading eigenpairs, with the dropped eigenvalues folded
//! into the diagonal `D` so the input diagonal is preserved. Evaluating the
//! quadratic form through the factor structure costs `O(n k)` per call.

use crate::market::ReturnsPanel;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Trailing covariance window: two years of trading days.
pub const DEFAULT_COVARIANCE_WINDOW: usize = 500;

/// Default factor count, clamped for small universes.
pub fn default_factor_count(n_risky: usize) -> usize {
    15.min(n_risky.saturating_sub(1)).max(1)
}

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("insufficient history: need {needed} return observations before index {at}, have {available}")]
    InsufficientHistory { at: usize, needed: usize, available: usize },
    #[error("covariance matrix is not symmetric (max asymmetry {0})")]
    Asymmetric(f64),
    #[error("factor count {k} out of range 1..={max}")]
    FactorCountOutOfRange { k: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Low-rank-plus-diagonal estimate of the asset-return covariance.
///
/// Dimensions include the cash slot (last row/column), whose variance is
/// zero by construction.
#[derive(Debug, Clone)]
pub struct FactorRiskModel {
    /// Eigenvector loadings, one column per retained factor.
    loadings: DMatrix<f64>,
    /// Retained eigenvalues, non-negative and descending.
    factor_var: DVector<f64>,
    /// Diagonal idiosyncratic variances from the dropped eigenpairs.
    idio: DVector<f64>,
}

impl FactorRiskModel {
    /// Matrix dimension (risky assets plus cash when built from a panel).
    pub fn dim(&self) -> usize {
        self.loadings.nrows()
    }

    /// Number of retained factors.
    pub fn factor_count(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn factor_variances(&self) -> &DVector<f64> {
        &self.factor_var
    }

    pub fn idiosyncratic(&self) -> &DVector<f64> {
        &self.idio
    }

    /// Dense reconstruction `F * diag(lambda) * F' + D`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.loadings * DMatrix::from_diagonal(&self.factor_var);
        let mut full = scaled * self.loadings.transpose();
        for i in 0..self.dim() {
            full[(i, i)] += self.idio[i];
        }
        full
    }

    /// Quadratic form `h' * Sigma * h` through the factor structure.
    pub fn portfolio_variance(&self, holdings: &[f64]) -> Result<f64, RiskError> {
        if holdings.len() != self.dim() {
            return Err(RiskError::DimensionMismatch {
                expected: self.dim(),
                actual: holdings.len(),
            });
        }
        let mut total = 0.0;
        for f in 0..self.factor_count() {
            let mut proj = 0.0;
            for i in 0..self.dim() {
                proj += self.loadings[(i, f)] * holdings[i];
            }
            total += self.factor_var[f] * proj * proj;
        }
        for i in 0..self.dim() {
            total += self.idio[i] * holdings[i] * holdings[i];
        }
        Ok(total)
    }

    /// Gradient of the quadratic form: `2 * Sigma * h`, through the factor
    /// structure.
    pub fn variance_gradient(&self, holdings: &[f64], out: &mut [f64]) {
        debug_assert_eq!(holdings.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for (i, o) in out.iter_mut().enumerate() {
            *o = 2.0 * self.idio[i] * holdings[i];
        }
        for f in 0..self.factor_count() {
            let mut proj = 0.0;
            for i in 0..self.dim() {
                proj += self.loadings[(i, f)] * holdings[i];
            }
            let scale = 2.0 * self.factor_var[f] * proj;
            for (i, o) in out.iter_mut().enumerate() {
                *o += scale * self.loadings[(i, f)];
            }
        }
    }
}

/// Free-function form of [`FactorRiskModel::portfolio_variance`].
pub fn quadratic_risk(model: &FactorRiskModel, holdings: &[f64]) -> Result<f64, RiskError> {
    model.portfolio_variance(holdings)
}

/// Population covariance of risky-asset simple returns over the `window`
/// observations for panel dates `t - window ..= t - 1`. The cash row and
/// column are zero. `t` is a panel date index.
pub fn trailing_covariance(
    returns: &ReturnsPanel,
    t: usize,
    window: usize,
) -> Result<DMatrix<f64>, RiskError> {
    // Panel date d has returns-index d - 1.
    let available = t.saturating_sub(1).min(returns.n_obs());
    if t < window + 1 || available < window {
        return Err(RiskError::InsufficientHistory { at: t, needed: window, available });
    }
    let lo = t - window - 1; // returns-index of panel date t - window
    let hi = t - 1; // exclusive
    let n_risky = returns.n_total() - 1;
    let dim = returns.n_total();
    let mut means = vec![0.0; n_risky];
    for (a, mean) in means.iter_mut().enumerate() {
        *mean = returns.simple_series(a)[lo..hi].iter().sum::<f64>() / window as f64;
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for a in 0..n_risky {
        let sa = &returns.simple_series(a)[lo..hi];
        for b in a..n_risky {
            let sb = &returns.simple_series(b)[lo..hi];
            let mut acc = 0.0;
            for i in 0..window {
                acc += (sa[i] - means[a]) * (sb[i] - means[b]);
            }
            let v = acc / window as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(cov)
}

/// Eigendecomposes `cov` and keeps the `k` leading eigenpairs as factors,
/// folding the remainder into a diagonal residual.
///
/// Eigenvalues are sorted descending (ties keep their original order) and
/// clamped at zero; inputs are expected to be PSD up to rounding.
pub fn fit_factor_model(cov: &DMatrix<f64>, k: usize) -> Result<FactorRiskModel, RiskError> {
    let dim = cov.nrows();
    if cov.ncols() != dim {
        return Err(RiskError::DimensionMismatch { expected: dim, actual: cov.ncols() });
    }
    let scale = cov.amax().max(1.0);
    let mut asym: f64 = 0.0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            asym = asym.max((cov[(i, j)] - cov[(j, i)]).abs());
        }
    }
    if asym > 1e-9 * scale {
        return Err(RiskError::Asymmetric(asym));
    }
    if k == 0 || k > dim {
        return Err(RiskError::FactorCountOutOfRange { k, max: dim });
    }

    let eig = cov.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).expect("finite eigenvalues")
    });

    let mut loadings = DMatrix::zeros(dim, k);
    let mut factor_var = DVector::zeros(k);
    for (rank, &idx) in order.iter().take(k).enumerate() {
        factor_var[rank] = eig.eigenvalues[idx].max(0.0);
        loadings.set_column(rank, &eig.eigenvectors.column(idx));
    }
    let mut idio = DVector::zeros(dim);
    for &idx in order.iter().skip(k) {
        let lambda = eig.eigenvalues[idx].max(0.0);
        if lambda == 0.0 {
            continue;
        }
        let q = eig.eigenvectors.column(idx);
        for i in 0..dim {
            idio[i] += lambda * q[i] * q[i];
        }
    }
    Ok(FactorRiskModel { loadings, factor_var, idio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{compute_returns, PricePanel};
    use chrono::NaiveDate;
    use rand::Rng;

    fn panel_from_closes(closes: Vec<Vec<f64>>) -> PricePanel {
        let t = closes[0].len();
        let dates: Vec<NaiveDate> = (0..t as u64)
            .map(|i| NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + chrono::Days::new(i))
            .collect();
        let assets = (0..closes.len()).map(|i| format!("A{i}")).collect();
        PricePanel::new(
            assets,
            dates,
            closes.clone(),
            closes.clone(),
            closes.clone(),
            closes.clone(),
            vec![vec![1000.0; t]; closes.len()],
            vec![0.0; t],
        )
        .unwrap()
    }

    fn random_psd(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose()
    }

    #[test]
    fn perfectly_correlated_assets_have_equal_entries() {
        let series: Vec<f64> = (0..30).map(|i| 100.0 * (1.0 + 0.01 * (i as f64).sin())).collect();
        let panel = panel_from_closes(vec![series.clone(), series]);
        let returns = compute_returns(&panel).unwrap();
        let cov = trailing_covariance(&returns, 21, 20).unwrap();
        assert!((cov[(0, 1)] - cov[(0, 0)]).abs() < 1e-15);
        assert!((cov[(1, 0)] - cov[(1, 1)]).abs() < 1e-15);
        // Cash row and column are zero.
        assert_eq!(cov[(2, 2)], 0.0);
        assert_eq!(cov[(0, 2)], 0.0);
    }

    #[test]
    fn constant_returns_give_zero_covariance() {
        let series: Vec<f64> = (0..30).map(|i| 100.0 * 1.01f64.powi(i)).collect();
        let panel = panel_from_closes(vec![series]);
        let returns = compute_returns(&panel).unwrap();
        let cov = trailing_covariance(&returns, 21, 20).unwrap();
        assert!(cov.amax() < 1e-15);
    }

    #[test]
    fn independent_series_have_near_zero_covariance() {
        // Monte Carlo oracle: at 1e4 observations the off-diagonal is within
        // three standard errors of zero.
        let mut rng = crate::rng::stream(77, &[1]);
        let t = 10_001;
        let mut closes = vec![Vec::with_capacity(t), Vec::with_capacity(t)];
        let mut p = [100.0, 200.0];
        for _ in 0..t {
            for a in 0..2 {
                closes[a].push(p[a]);
                p[a] *= 1.0 + rng.gen_range(-0.01..0.01);
            }
        }
        let panel = panel_from_closes(closes);
        let returns = compute_returns(&panel).unwrap();
        let window = 10_000;
        let cov = trailing_covariance(&returns, window + 1, window).unwrap();
        let se = (cov[(0, 0)] * cov[(1, 1)] / window as f64).sqrt();
        assert!(cov[(0, 1)].abs() < 3.0 * se, "off-diag {} vs se {se}", cov[(0, 1)]);
    }

    #[test]
    fn insufficient_history_is_rejected() {
        let series: Vec<f64> = (0..15).map(|i| 100.0 + i as f64).collect();
        let panel = panel_from_closes(vec![series]);
        let returns = compute_returns(&panel).unwrap();
        assert!(matches!(
            trailing_covariance(&returns, 10, 20),
            Err(RiskError::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn full_rank_fit_reconstructs_input() {
        let mut rng = crate::rng::stream(5, &[2]);
        let cov = random_psd(6, &mut rng);
        let model = fit_factor_model(&cov, 6).unwrap();
        assert!((model.reconstruct() - &cov).amax() < 1e-10);
        assert!(model.idiosyncratic().amax() < 1e-12);
    }

    #[test]
    fn identity_with_one_factor_preserves_trace_and_diagonal() {
        let cov = DMatrix::identity(5, 5);
        let model = fit_factor_model(&cov, 1).unwrap();
        let rebuilt = model.reconstruct();
        let trace: f64 = (0..5).map(|i| rebuilt[(i, i)]).sum();
        assert!((trace - 5.0).abs() < 1e-10);
        for i in 0..5 {
            assert!((rebuilt[(i, i)] - 1.0).abs() < 1e-10);
            for j in 0..5 {
                if i != j {
                    assert!(rebuilt[(i, j)].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn diagonal_is_preserved_for_random_psd_inputs() {
        let mut rng = crate::rng::stream(5, &[3]);
        for trial in 0..100 {
            let cov = random_psd(10, &mut rng);
            let k = 1 + (trial % 10);
            let model = fit_factor_model(&cov, k).unwrap();
            let rebuilt = model.reconstruct();
            for i in 0..10 {
                assert!(
                    (rebuilt[(i, i)] - cov[(i, i)]).abs() < 1e-10,
                    "trial {trial} k {k} diag {i}: {} vs {}",
                    rebuilt[(i, i)],
                    cov[(i, i)]
                );
            }
        }
    }

    #[test]
    fn eigenvalues_are_descending_and_nonnegative() {
        let mut rng = crate::rng::stream(5, &[4]);
        let cov = random_psd(8, &mut rng);
        let model = fit_factor_model(&cov, 5).unwrap();
        let lambda = model.factor_variances();
        for f in 1..model.factor_count() {
            assert!(lambda[f] <= lambda[f - 1]);
        }
        assert!(lambda[model.factor_count() - 1] >= 0.0);
    }

    #[test]
    fn factor_form_matches_dense_quadratic() {
        let mut rng = crate::rng::stream(5, &[5]);
        for _ in 0..50 {
            let cov = random_psd(9, &mut rng);
            let model = fit_factor_model(&cov, 4).unwrap();
            let dense = model.reconstruct();
            let h: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hv = DVector::from_column_slice(&h);
            let expected = (hv.transpose() * &dense * &hv)[(0, 0)];
            let got = model.portfolio_variance(&h).unwrap();
            assert!((got - expected).abs() < 1e-10);
            assert!(got >= -1e-10);
        }
    }

    #[test]
    fn all_cash_holdings_have_zero_risk() {
        let series: Vec<f64> = (0..40).map(|i| 100.0 * (1.0 + 0.02 * (i as f64).cos())).collect();
        let panel = panel_from_closes(vec![series.clone(), series.iter().rev().copied().collect()]);
        let returns = compute_returns(&panel).unwrap();
        let cov = trailing_covariance(&returns, 31, 30).unwrap();
        let model = fit_factor_model(&cov, 2).unwrap();
        let risk = model.portfolio_variance(&[0.0, 0.0, 1.0]).unwrap();
        assert!(risk.abs() < 1e-15);
        // Single risky asset extracts the diagonal.
        let e0 = model.portfolio_variance(&[1.0, 0.0, 0.0]).unwrap();
        assert!((e0 - cov[(0, 0)]).abs() < 1e-10);
    }

    #[test]
    fn variance_gradient_matches_dense() {
        let mut rng = crate::rng::stream(5, &[6]);
        let cov = random_psd(7, &mut rng);
        let model = fit_factor_model(&cov, 3).unwrap();
        let dense = model.reconstruct();
        let h: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hv = DVector::from_column_slice(&h);
        let expected = 2.0 * &dense * &hv;
        let mut got = vec![0.0; 7];
        model.variance_gradient(&h, &mut got);
        for i in 0..7 {
            assert!((got[i] - expected[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cov = DMatrix::identity(4, 4);
        assert!(matches!(
            fit_factor_model(&cov, 0),
            Err(RiskError::FactorCountOutOfRange { .. })
        ));
        assert!(matches!(
            fit_factor_model(&cov, 5),
            Err(RiskError::FactorCountOutOfRange { .. })
        ));
        let mut asym = cov.clone();
        asym[(0, 1)] = 0.5;
        assert!(matches!(fit_factor_model(&asym, 2), Err(RiskError::Asymmetric(_))));
    }
}
