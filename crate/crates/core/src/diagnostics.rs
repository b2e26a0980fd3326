//! Regression diagnostics: Pearson tests, VIF, winsorization, DFBETA
//! influence filtering.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::ols::{ols_fit, OlsError};
use crate::stats;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("need >= 3 paired non-missing observations, got {0}")]
    TooFewPairs(usize),
    #[error("constant input series")]
    ConstantInput,
    #[error("winsorize percentile must lie in (0, 50), got {0}")]
    InvalidPercentile(f64),
    #[error("VIF needs at least 2 regressors, got {0}")]
    TooFewRegressors(usize),
    #[error("rank deficient at tolerance")]
    RankDeficient,
    #[error(transparent)]
    Ols(#[from] OlsError),
}

/// Sample Pearson correlation with a two-sided p-value from the
/// t-distribution with n-2 degrees of freedom.
pub fn pearson_test(x: &[f64], y: &[f64]) -> Result<(f64, f64), DiagnosticsError> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Err(DiagnosticsError::TooFewPairs(n));
    }
    let r = stats::pearson(&x[..n], &y[..n]);
    if r.is_nan() {
        return Err(DiagnosticsError::ConstantInput);
    }
    let df = (n - 2) as f64;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok((r, p))
}

/// Variance inflation factors: VIF_k = 1 / (1 - R²_k) from regressing
/// column k on the remaining columns plus an intercept.
///
/// `x` holds the regressors only (no intercept column).
pub fn vif(x: &DMatrix<f64>) -> Result<Vec<f64>, DiagnosticsError> {
    let n = x.nrows();
    let k = x.ncols();
    if k < 2 {
        return Err(DiagnosticsError::TooFewRegressors(k));
    }
    let mut out = Vec::with_capacity(k);
    for target in 0..k {
        let y: Vec<f64> = (0..n).map(|i| x[(i, target)]).collect();
        let mut design = DMatrix::zeros(n, k);
        for i in 0..n {
            design[(i, 0)] = 1.0;
        }
        let mut col_out = 1;
        for j in 0..k {
            if j == target {
                continue;
            }
            for i in 0..n {
                design[(i, col_out)] = x[(i, j)];
            }
            col_out += 1;
        }
        let fit = ols_fit(&y, &design).map_err(|e| match e {
            OlsError::RankDeficient { .. } => DiagnosticsError::RankDeficient,
            other => DiagnosticsError::Ols(other),
        })?;
        let remainder = 1.0 - fit.r_squared;
        if remainder < 1e-12 {
            return Err(DiagnosticsError::RankDeficient);
        }
        out.push(1.0 / remainder);
    }
    Ok(out)
}

/// Clamp the tails of a series at its nearest-rank percentile values:
/// values below the pct-th percentile are set to it, values above the
/// (100-pct)-th likewise. Nearest-rank percentiles make the operation
/// idempotent.
pub fn winsorize(values: &[f64], pct: f64) -> Result<Vec<f64>, DiagnosticsError> {
    if !(pct > 0.0 && pct < 50.0) {
        return Err(DiagnosticsError::InvalidPercentile(pct));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let lo = stats::percentile_nearest_rank(&sorted, pct);
    let hi = stats::percentile_nearest_rank(&sorted, 100.0 - pct);
    Ok(values.iter().map(|&v| v.clamp(lo, hi)).collect())
}

/// Outcome of a DFBETA influence screen.
#[derive(Debug, Clone)]
pub struct DfbetaFilter {
    /// Standardized coefficient change per observation, full-sample fit.
    pub dfbetas: Vec<f64>,
    /// Row indices with |DFBETA| above the threshold.
    pub excluded: Vec<usize>,
    /// Remaining row indices, in order.
    pub retained: Vec<usize>,
    /// The 2/sqrt(n) cutoff actually applied.
    pub threshold: f64,
}

/// Screen observations by their influence on the focal coefficient.
///
/// DFBETA_i = (beta_hat - beta_hat(-i)) / SE(beta_hat), computed once
/// against the full-sample fit via the hat-matrix identity
/// beta_hat - beta_hat(-i) = (X'X)^-1 x_i e_i / (1 - h_ii); rows with
/// |DFBETA_i| > threshold (default 2/sqrt(n)) are excluded. No iteration.
pub fn dfbeta_filter(
    y: &[f64],
    x: &DMatrix<f64>,
    focal: usize,
    threshold: Option<f64>,
) -> Result<DfbetaFilter, DiagnosticsError> {
    let fit = ols_fit(y, x)?;
    let n = fit.n;
    let se_focal = fit.standard_errors[focal];
    let threshold = threshold.unwrap_or(2.0 / (n as f64).sqrt());

    let xtx_inv = fit.xtx_inv();
    let mut dfbetas = Vec::with_capacity(n);
    for i in 0..n {
        let xi = x.row(i);
        // focal component of (X'X)^-1 x_i
        let mut proj = 0.0;
        for j in 0..fit.k {
            proj += xtx_inv[(focal, j)] * xi[j];
        }
        let h = fit.hat_diagonal()[i];
        let delta = proj * fit.residuals[i] / (1.0 - h);
        let dfbeta = if se_focal > 0.0 { delta / se_focal } else { 0.0 };
        dfbetas.push(dfbeta);
    }

    let mut excluded = Vec::new();
    let mut retained = Vec::new();
    for (i, d) in dfbetas.iter().enumerate() {
        if d.abs() > threshold {
            excluded.push(i);
        } else {
            retained.push(i);
        }
    }

    // The filtered sample must still support the regression.
    if !excluded.is_empty() {
        let kept_y: Vec<f64> = retained.iter().map(|&i| y[i]).collect();
        let mut kept_x = DMatrix::zeros(retained.len(), fit.k);
        for (row, &i) in retained.iter().enumerate() {
            for j in 0..fit.k {
                kept_x[(row, j)] = x[(i, j)];
            }
        }
        ols_fit(&kept_y, &kept_x).map_err(|e| match e {
            OlsError::RankDeficient { .. } | OlsError::TooFewRows { .. } => {
                DiagnosticsError::RankDeficient
            }
            other => DiagnosticsError::Ols(other),
        })?;
    }

    Ok(DfbetaFilter {
        dfbetas,
        excluded,
        retained,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ols::design_with_intercept;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal as GaussDist};

    #[test]
    fn pearson_identity_and_negation() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let (r, p) = pearson_test(&x, &x).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (r, _) = pearson_test(&x, &neg).unwrap();
        assert_abs_diff_eq!(r, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_rejects_constant_input() {
        let x = vec![1.0; 10];
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            pearson_test(&x, &y),
            Err(DiagnosticsError::ConstantInput)
        ));
    }

    #[test]
    fn vif_of_orthogonal_columns_is_one() {
        // Two exactly orthogonal demeaned columns.
        let a = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let x = DMatrix::from_columns(&[
            nalgebra::DVector::from_vec(a),
            nalgebra::DVector::from_vec(b),
        ]);
        let v = vif(&x).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn vif_for_exact_correlation_point_six() {
        // Construct sample correlation exactly 0.6: x2 = 0.6 u + 0.8 v with
        // u, v orthonormal columns of equal norm.
        let n = 50;
        let u: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let v: Vec<f64> = (0..n)
            .map(|i| if (i / 2) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let x2: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.6 * a + 0.8 * b).collect();
        let x = DMatrix::from_columns(&[
            nalgebra::DVector::from_vec(u),
            nalgebra::DVector::from_vec(x2),
        ]);
        let v = vif(&x).unwrap();
        // 1 / (1 - 0.36) = 1.5625 exactly.
        assert_abs_diff_eq!(v[0], 1.5625, epsilon = 1e-9);
        assert_abs_diff_eq!(v[1], 1.5625, epsilon = 1e-9);
    }

    #[test]
    fn near_duplicate_columns_hit_rank_tolerance() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 1e-14).collect();
        let x = DMatrix::from_columns(&[
            nalgebra::DVector::from_vec(a),
            nalgebra::DVector::from_vec(b),
        ]);
        assert!(matches!(vif(&x), Err(DiagnosticsError::RankDeficient)));
    }

    #[test]
    fn winsorize_clamps_to_nearest_rank_percentiles() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let w = winsorize(&values, 5.0).unwrap();
        assert_eq!(w.iter().cloned().fold(f64::INFINITY, f64::min), 5.0);
        assert_eq!(w.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 95.0);
        assert_eq!(w[0], 5.0);
        assert_eq!(w[99], 95.0);
        assert_eq!(w[49], 50.0); // interior values untouched
    }

    #[test]
    fn winsorize_is_idempotent_and_order_preserving() {
        let values = vec![-50.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 900.0];
        let once = winsorize(&values, 10.0).unwrap();
        let twice = winsorize(&once, 10.0).unwrap();
        assert_eq!(once, twice);
        for w in once.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn winsorize_no_op_when_band_covers_everything() {
        let values = vec![5.0; 12];
        assert_eq!(winsorize(&values, 5.0).unwrap(), values);
        assert!(matches!(
            winsorize(&values, 0.0),
            Err(DiagnosticsError::InvalidPercentile(_))
        ));
        assert!(matches!(
            winsorize(&values, 50.0),
            Err(DiagnosticsError::InvalidPercentile(_))
        ));
    }

    #[test]
    fn dfbeta_matches_leave_one_out_refits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let gauss = GaussDist::new(0.0, 1.0).unwrap();
        let n = 60;
        let x1: Vec<f64> = (0..n).map(|_| gauss.sample(&mut rng)).collect();
        let mut y: Vec<f64> = x1
            .iter()
            .map(|v| 0.7 * v + 0.3 * gauss.sample(&mut rng))
            .collect();
        y[17] += 6.0; // one gross outlier
        let x = design_with_intercept(&[&x1]);
        let result = dfbeta_filter(&y, &x, 1, None).unwrap();

        let full = ols_fit(&y, &x).unwrap();
        for i in 0..n {
            let keep: Vec<usize> = (0..n).filter(|&r| r != i).collect();
            let sub_y: Vec<f64> = keep.iter().map(|&r| y[r]).collect();
            let sub_x_col: Vec<f64> = keep.iter().map(|&r| x1[r]).collect();
            let sub_x = design_with_intercept(&[&sub_x_col]);
            let loo = ols_fit(&sub_y, &sub_x).unwrap();
            let expected =
                (full.coefficients[1] - loo.coefficients[1]) / full.standard_errors[1];
            assert_abs_diff_eq!(result.dfbetas[i], expected, epsilon = 1e-8);
        }
        assert!(result.excluded.contains(&17));
    }

    #[test]
    fn exact_fit_excludes_nothing() {
        let x1: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let y: Vec<f64> = x1.iter().map(|v| 3.0 * v - 2.0).collect();
        let x = design_with_intercept(&[&x1]);
        let result = dfbeta_filter(&y, &x, 1, None).unwrap();
        assert!(result.excluded.is_empty());
        assert!(result.dfbetas.iter().all(|d| d.abs() < 1e-6));
    }

    #[test]
    fn infinite_threshold_excludes_nothing() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let gauss = GaussDist::new(0.0, 1.0).unwrap();
        let x1: Vec<f64> = (0..40).map(|_| gauss.sample(&mut rng)).collect();
        let y: Vec<f64> = x1
            .iter()
            .map(|v| v + gauss.sample(&mut rng) * 3.0)
            .collect();
        let x = design_with_intercept(&[&x1]);
        let result = dfbeta_filter(&y, &x, 1, Some(f64::INFINITY)).unwrap();
        assert!(result.excluded.is_empty());
        assert_eq!(result.retained.len(), 40);
    }
}
