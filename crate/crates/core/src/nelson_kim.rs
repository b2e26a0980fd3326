//! Randomized p-values for persistent predictors.
//!
//! The focal regressor is modeled as an AR(1) with intercept; pseudo
//! predictor paths are simulated from the fitted process with residuals
//! resampled with replacement, and the outcome is regenerated under the
//! null of no predictability (controls held fixed: the null fit regresses y
//! on the remaining columns and its residuals are resampled around the null
//! fitted values). The p-value is the two-sided extreme-rank share with the
//! (r+1)/(R+1) small-sample correction.
//!
//! If the AR(1) fit is explosive (|rho| >= 1) the procedure falls back to
//! an iid permutation of the focal column and flags it in the result.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ols::{fit_rows, ols_fit, OlsError};
use crate::seeding::{self, stream};

#[derive(Debug, Error)]
pub enum NelsonKimError {
    #[error("focal regressor needs >= 20 observations, got {0}")]
    TooFewObservations(usize),
    #[error("focal index {focal} out of range for {k} columns")]
    BadFocal { focal: usize, k: usize },
    #[error("need at least 100 replicates, got {0}")]
    TooFewReps(usize),
    #[error("replicate {replicate} stayed rank-deficient after {attempts} redraws")]
    Degenerate { replicate: usize, attempts: usize },
    #[error(transparent)]
    Ols(#[from] OlsError),
}

#[derive(Debug, Clone)]
pub struct NelsonKimResult {
    /// Randomized two-sided p-value for the focal coefficient.
    pub p_value: f64,
    /// Observed full-sample focal coefficient.
    pub observed: f64,
    /// Fitted AR(1) persistence of the focal regressor.
    pub ar_rho: f64,
    pub ar_intercept: f64,
    /// True when |rho| >= 1 forced the iid-permutation fallback.
    pub permutation_fallback: bool,
    pub reps: usize,
    pub seed: u64,
}

const MAX_REDRAWS: usize = 1_000;

/// Randomized p-value for column `focal` of the design (intercept included
/// in `x`; `focal` must not be the intercept column).
pub fn nelson_kim_pvalue(
    y: &[f64],
    x: &DMatrix<f64>,
    focal: usize,
    reps: usize,
    seed: u64,
) -> Result<NelsonKimResult, NelsonKimError> {
    let n = x.nrows();
    let k = x.ncols();
    if focal >= k {
        return Err(NelsonKimError::BadFocal { focal, k });
    }
    if n < 20 {
        return Err(NelsonKimError::TooFewObservations(n));
    }
    if reps < 100 {
        return Err(NelsonKimError::TooFewReps(reps));
    }

    let full = ols_fit(y, x)?;
    let observed = full.coefficients[focal];
    let focal_col: Vec<f64> = (0..n).map(|i| x[(i, focal)]).collect();

    // AR(1) with intercept on the focal regressor.
    let lagged = &focal_col[..n - 1];
    let current = &focal_col[1..];
    let ar_x = crate::ols::design_with_intercept(&[lagged]);
    let ar_fit = ols_fit(current, &ar_x)?;
    let (ar_intercept, ar_rho) = (ar_fit.coefficients[0], ar_fit.coefficients[1]);
    let ar_residuals = ar_fit.residuals.clone();

    // Null model: y on everything except the focal column.
    let mut null_x = DMatrix::zeros(n, k - 1);
    let mut out_col = 0;
    for j in 0..k {
        if j == focal {
            continue;
        }
        for i in 0..n {
            null_x[(i, out_col)] = x[(i, j)];
        }
        out_col += 1;
    }
    let null_fit = ols_fit(y, &null_x)?;
    let null_fitted = null_fit.fitted.clone();
    let null_residuals = null_fit.residuals.clone();

    let permutation_fallback = ar_rho.abs() >= 1.0;
    let rows: Vec<usize> = (0..n).collect();

    let null_draws: Result<Vec<f64>, NelsonKimError> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeding::unit_rng(seed, stream::NELSON_KIM, rep as u64);
            for _attempt in 0..MAX_REDRAWS {
                let pseudo_x = if permutation_fallback {
                    let mut permuted = focal_col.clone();
                    permuted.shuffle(&mut rng);
                    permuted
                } else {
                    let mut path = Vec::with_capacity(n);
                    path.push(focal_col[0]);
                    for t in 1..n {
                        let shock = ar_residuals[rng.random_range(0..ar_residuals.len())];
                        path.push(ar_intercept + ar_rho * path[t - 1] + shock);
                    }
                    path
                };
                let pseudo_y: Vec<f64> = if permutation_fallback {
                    y.to_vec()
                } else {
                    (0..n)
                        .map(|t| {
                            null_fitted[t]
                                + null_residuals[rng.random_range(0..null_residuals.len())]
                        })
                        .collect()
                };
                let mut design = x.clone();
                for i in 0..n {
                    design[(i, focal)] = pseudo_x[i];
                }
                if let Some(coefs) = fit_rows(&pseudo_y, &design, &rows) {
                    return Ok(coefs[focal]);
                }
            }
            Err(NelsonKimError::Degenerate {
                replicate: rep,
                attempts: MAX_REDRAWS,
            })
        })
        .collect();
    let null_draws = null_draws?;

    let extreme = null_draws
        .iter()
        .filter(|b| b.abs() >= observed.abs())
        .count();
    let p_value = (extreme + 1) as f64 / (reps + 1) as f64;

    Ok(NelsonKimResult {
        p_value,
        observed,
        ar_rho,
        ar_intercept,
        permutation_fallback,
        reps,
        seed,
    })
}
