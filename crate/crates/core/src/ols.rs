//! Ordinary least squares via singular value decomposition.
//!
//! The SVD route gives a stable solve, a rank check, the hat-matrix
//! diagonal (from the thin U factor), and (X'X)^-1 (from V and the singular
//! values) in one pass. Resampling loops use a cheaper in-place Cholesky on
//! the normal equations; see [`solve_normal_equations`].

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OlsError {
    #[error("need more rows than columns: n={n}, k={k}")]
    TooFewRows { n: usize, k: usize },
    #[error("design matrix is rank deficient (rank {rank} < {k})")]
    RankDeficient { rank: usize, k: usize },
    #[error("dimension mismatch: y has {y_len} rows, X has {x_rows}")]
    DimensionMismatch { y_len: usize, x_rows: usize },
}

/// A fitted least-squares regression.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Classical standard errors, sigma^2 * diag((X'X)^-1).
    pub standard_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Two-sided p-values from the t distribution with n-k df.
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Residual variance RSS / (n - k).
    pub sigma2: f64,
    pub n: usize,
    pub k: usize,
    hat_diagonal: Vec<f64>,
    xtx_inv: DMatrix<f64>,
}

impl OlsFit {
    /// Leverage h_ii of each observation.
    pub fn hat_diagonal(&self) -> &[f64] {
        &self.hat_diagonal
    }

    pub fn xtx_inv(&self) -> &DMatrix<f64> {
        &self.xtx_inv
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

/// Fit y = X b by least squares. X must include its own intercept column.
///
/// Rows with missing values are the caller's problem: the harness drops
/// them listwise before building the matrix.
pub fn ols_fit(y: &[f64], x: &DMatrix<f64>) -> Result<OlsFit, OlsError> {
    let n = x.nrows();
    let k = x.ncols();
    if y.len() != n {
        return Err(OlsError::DimensionMismatch {
            y_len: y.len(),
            x_rows: n,
        });
    }
    if n <= k {
        return Err(OlsError::TooFewRows { n, k });
    }

    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * n.max(k) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < k {
        return Err(OlsError::RankDeficient { rank, k });
    }

    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let yv = DVector::from_column_slice(y);

    // b = V S^-1 U' y
    let mut uty = u.transpose() * &yv;
    for (i, s) in svd.singular_values.iter().enumerate() {
        uty[i] /= s;
    }
    let beta = v_t.transpose() * uty;

    let fitted_v = x * &beta;
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let df = (n - k) as f64;
    let adj_r_squared = if tss > 0.0 {
        1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df
    } else {
        r_squared
    };
    let sigma2 = rss / df;

    // (X'X)^-1 = V S^-2 V'
    let mut v_scaled = v_t.transpose();
    for (j, s) in svd.singular_values.iter().enumerate() {
        let mut col = v_scaled.column_mut(j);
        col /= *s;
    }
    let xtx_inv = &v_scaled * v_scaled.transpose();

    // h_ii = sum_j U[i,j]^2 over the thin factor.
    let hat_diagonal: Vec<f64> = (0..n)
        .map(|i| u.row(i).iter().map(|v| v * v).sum())
        .collect();

    let t_dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    let mut standard_errors = Vec::with_capacity(k);
    let mut t_values = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let se = (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt();
        let t = if se > 0.0 { beta[j] / se } else { f64::INFINITY * beta[j].signum() };
        let p = if se > 0.0 {
            2.0 * (1.0 - t_dist.cdf(t.abs()))
        } else if beta[j] == 0.0 {
            1.0
        } else {
            0.0
        };
        standard_errors.push(se);
        t_values.push(t);
        p_values.push(p.clamp(0.0, 1.0));
    }

    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        residuals,
        fitted,
        standard_errors,
        t_values,
        p_values,
        r_squared,
        adj_r_squared,
        sigma2,
        n,
        k,
        hat_diagonal,
        xtx_inv,
    })
}

/// Least-squares residuals via the minimum-norm SVD solution.
///
/// Unlike [`ols_fit`] this tolerates rank deficiency: the projection onto
/// the column space is unique even when the coefficients are not, so the
/// residuals are still well defined. Used for idiosyncratic-volatility
/// style computations where only residuals matter.
pub fn projection_residuals(y: &[f64], x: &DMatrix<f64>) -> Result<Vec<f64>, OlsError> {
    let n = x.nrows();
    let k = x.ncols();
    if y.len() != n {
        return Err(OlsError::DimensionMismatch {
            y_len: y.len(),
            x_rows: n,
        });
    }
    if n <= k {
        return Err(OlsError::TooFewRows { n, k });
    }
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * n.max(k) as f64 * f64::EPSILON;
    let u = svd.u.as_ref().expect("u requested");
    let yv = DVector::from_column_slice(y);
    // y_hat = U U' y over columns with non-negligible singular values.
    let uty = u.transpose() * &yv;
    let mut y_hat = DVector::zeros(n);
    for (j, s) in svd.singular_values.iter().enumerate() {
        if *s > tol {
            y_hat += u.column(j) * uty[j];
        }
    }
    Ok(y.iter().zip(y_hat.iter()).map(|(a, b)| a - b).collect())
}

/// Solve the normal equations X'X b = X'y in place with a Cholesky
/// factorization. Returns None when a pivot collapses, which the resampling
/// loops treat as a degenerate draw. `k` is small, so this is the cheap path
/// for bootstrap replicates.
pub(crate) fn solve_normal_equations(
    xtx: &mut [f64],
    xty: &mut [f64],
    k: usize,
) -> Option<Vec<f64>> {
    debug_assert_eq!(xtx.len(), k * k);
    debug_assert_eq!(xty.len(), k);
    let max_diag = (0..k)
        .map(|i| xtx[i * k + i].abs())
        .fold(0.0f64, f64::max);
    let tol = max_diag * 1e-12;

    // In-place lower Cholesky.
    for i in 0..k {
        for j in 0..=i {
            let mut sum = xtx[i * k + j];
            for m in 0..j {
                sum -= xtx[i * k + m] * xtx[j * k + m];
            }
            if i == j {
                if sum <= tol {
                    return None;
                }
                xtx[i * k + j] = sum.sqrt();
            } else {
                xtx[i * k + j] = sum / xtx[j * k + j];
            }
        }
    }
    // Forward substitution L z = X'y.
    for i in 0..k {
        let mut sum = xty[i];
        for m in 0..i {
            sum -= xtx[i * k + m] * xty[m];
        }
        xty[i] = sum / xtx[i * k + i];
    }
    // Back substitution L' b = z.
    for i in (0..k).rev() {
        let mut sum = xty[i];
        for m in i + 1..k {
            sum -= xtx[m * k + i] * xty[m];
        }
        xty[i] = sum / xtx[i * k + i];
    }
    Some(xty.to_vec())
}

/// Accumulate X'X and X'y for a row subset given by `rows`, then solve.
pub(crate) fn fit_rows(
    y: &[f64],
    x: &DMatrix<f64>,
    rows: &[usize],
) -> Option<Vec<f64>> {
    let k = x.ncols();
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for &r in rows {
        let row = x.row(r);
        for i in 0..k {
            let xi = row[i];
            xty[i] += xi * y[r];
            for j in 0..=i {
                xtx[i * k + j] += xi * row[j];
            }
        }
    }
    // Mirror the lower triangle.
    for i in 0..k {
        for j in i + 1..k {
            xtx[i * k + j] = xtx[j * k + i];
        }
    }
    solve_normal_equations(&mut xtx, &mut xty, k)
}

/// Convenience: build a design matrix with a leading intercept column.
pub fn design_with_intercept(columns: &[&[f64]]) -> DMatrix<f64> {
    let n = columns.first().map_or(0, |c| c.len());
    let k = columns.len() + 1;
    let mut x = DMatrix::zeros(n, k);
    for i in 0..n {
        x[(i, 0)] = 1.0;
    }
    for (j, col) in columns.iter().enumerate() {
        assert_eq!(col.len(), n, "ragged design columns");
        for i in 0..n {
            x[(i, j + 1)] = col[i];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_is_recovered() {
        let x_vals: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x_vals.iter().map(|v| 2.0 * v + 1.0).collect();
        let x = design_with_intercept(&[&x_vals]);
        let fit = ols_fit(&y, &x).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coefficients[1], 2.0, epsilon = 1e-10);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-10));
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_y_gives_zero_slope_and_mean_intercept() {
        let x_vals: Vec<f64> = (0..15).map(|i| (i as f64).sin()).collect();
        let y = vec![3.5; 15];
        let x = design_with_intercept(&[&x_vals]);
        let fit = ols_fit(&y, &x).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 3.5, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coefficients[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let x_vals: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = vec![1.0; 10];
        let x = design_with_intercept(&[&x_vals, &x_vals]);
        assert!(matches!(
            ols_fit(&y, &x),
            Err(OlsError::RankDeficient { .. })
        ));
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let x = design_with_intercept(&[&[1.0, 2.0][..]]);
        assert!(matches!(
            ols_fit(&[1.0, 2.0], &x),
            Err(OlsError::TooFewRows { .. })
        ));
    }

    #[test]
    fn adjusted_r_squared_never_exceeds_r_squared() {
        let x1: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let x2: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let y: Vec<f64> = (0..30)
            .map(|i| 0.5 * x1[i] - 0.2 * x2[i] + ((i * 7919) % 13) as f64 * 0.05)
            .collect();
        let x = design_with_intercept(&[&x1, &x2]);
        let fit = ols_fit(&y, &x).unwrap();
        assert!(fit.adj_r_squared <= fit.r_squared + 1e-15);
    }

    #[test]
    fn normal_equations_match_svd_route() {
        let x1: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let x2: Vec<f64> = (0..50).map(|i| (i as f64 * 0.11).cos() * 2.0).collect();
        let y: Vec<f64> = (0..50)
            .map(|i| 1.0 + 0.8 * x1[i] - 1.3 * x2[i] + ((i * 31) % 7) as f64 * 0.1)
            .collect();
        let x = design_with_intercept(&[&x1, &x2]);
        let fit = ols_fit(&y, &x).unwrap();
        let rows: Vec<usize> = (0..50).collect();
        let fast = fit_rows(&y, &x, &rows).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&fast) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn rank_deficient_projection_still_has_residuals() {
        // Zero factor column: residuals equal demeaned y.
        let zeros = vec![0.0; 12];
        let y: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let x = design_with_intercept(&[&zeros]);
        let res = projection_residuals(&y, &x).unwrap();
        let mean = 5.5;
        for (i, r) in res.iter().enumerate() {
            assert_abs_diff_eq!(*r, i as f64 - mean, epsilon = 1e-10);
        }
    }

    #[test]
    fn hat_diagonal_sums_to_k() {
        let x1: Vec<f64> = (0..25).map(|i| (i as f64 * 1.3).sin()).collect();
        let y: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let x = design_with_intercept(&[&x1]);
        let fit = ols_fit(&y, &x).unwrap();
        let trace: f64 = fit.hat_diagonal().iter().sum();
        assert_abs_diff_eq!(trace, 2.0, epsilon = 1e-8);
    }
}
