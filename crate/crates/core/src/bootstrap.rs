//! Moving block bootstrap standard errors for regression coefficients.
//!
//! Pairs (row-wise) resampling: overlapping blocks of `block_len`
//! consecutive rows are drawn with replacement and concatenated until `n`
//! rows are reached, preserving the serial dependence that overlapping
//! return windows induce. Each replicate refits the regression; the SE of a
//! coefficient is the sample standard deviation of its replicate draws and
//! the p-value comes from the normal approximation to beta/SE.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::ols::{fit_rows, ols_fit, OlsError};
use crate::seeding::{self, stream};

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("series too short: n={n} < 2 * block_len={block_len}")]
    TooShort { n: usize, block_len: usize },
    #[error("block_len must be >= 1")]
    ZeroBlock,
    #[error("need at least 100 replicates, got {0}")]
    TooFewReps(usize),
    #[error("replicate {replicate} stayed rank-deficient after {attempts} redraws")]
    Degenerate { replicate: usize, attempts: usize },
    #[error(transparent)]
    Ols(#[from] OlsError),
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// Per-coefficient bootstrap standard errors.
    pub standard_errors: Vec<f64>,
    /// Two-sided normal-approximation p-values for the full-sample
    /// coefficients.
    pub p_values: Vec<f64>,
    /// Full-sample coefficients the p-values refer to.
    pub coefficients: Vec<f64>,
    pub block_len: usize,
    pub reps: usize,
    pub seed: u64,
}

/// Residuals at machine precision mean every pairs-resample refit returns
/// the same coefficients, so the sampling distribution is degenerate and
/// the SEs are exactly zero. Detect that case instead of reporting noise.
fn exact_fit(y: &[f64], residuals: &[f64]) -> bool {
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    residuals.iter().all(|e| e.abs() <= scale * 1e-13)
}

const MAX_REDRAWS: usize = 1_000;

/// Block-bootstrap standard errors and p-values.
pub fn block_bootstrap_se(
    y: &[f64],
    x: &DMatrix<f64>,
    block_len: usize,
    reps: usize,
    seed: u64,
) -> Result<BootstrapResult, BootstrapError> {
    if block_len == 0 {
        return Err(BootstrapError::ZeroBlock);
    }
    let n = x.nrows();
    if n < 2 * block_len {
        return Err(BootstrapError::TooShort { n, block_len });
    }
    if reps < 100 {
        return Err(BootstrapError::TooFewReps(reps));
    }

    let full = ols_fit(y, x)?;
    let k = x.ncols();

    if exact_fit(y, &full.residuals) {
        let p_values = full
            .coefficients
            .iter()
            .map(|&b| if b == 0.0 { 1.0 } else { 0.0 })
            .collect();
        return Ok(BootstrapResult {
            standard_errors: vec![0.0; k],
            p_values,
            coefficients: full.coefficients,
            block_len,
            reps,
            seed,
        });
    }

    let n_blocks = n - block_len + 1; // overlapping block starts
    let draws_per_rep = n.div_ceil(block_len);

    let replicate_coefs: Result<Vec<Vec<f64>>, BootstrapError> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeding::unit_rng(seed, stream::BOOTSTRAP, rep as u64);
            let mut rows = Vec::with_capacity(draws_per_rep * block_len);
            for attempt in 0..MAX_REDRAWS {
                rows.clear();
                while rows.len() < n {
                    let start = rng.random_range(0..n_blocks);
                    let take = block_len.min(n - rows.len());
                    rows.extend(start..start + take);
                }
                if let Some(coefs) = fit_rows(y, x, &rows) {
                    return Ok(coefs);
                }
                let _ = attempt;
            }
            Err(BootstrapError::Degenerate {
                replicate: rep,
                attempts: MAX_REDRAWS,
            })
        })
        .collect();
    let replicate_coefs = replicate_coefs?;

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut standard_errors = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let draws: Vec<f64> = replicate_coefs.iter().map(|c| c[j]).collect();
        let se = crate::stats::sample_sd(&draws);
        let b = full.coefficients[j];
        let p = if se > 0.0 {
            (2.0 * (1.0 - normal.cdf((b / se).abs()))).clamp(0.0, 1.0)
        } else if b == 0.0 {
            1.0
        } else {
            0.0
        };
        standard_errors.push(se);
        p_values.push(p);
    }

    Ok(BootstrapResult {
        standard_errors,
        p_values,
        coefficients: full.coefficients,
        block_len,
        reps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ols::design_with_intercept;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal as GaussDist};

    #[test]
    fn exact_fit_has_zero_standard_errors() {
        let x_vals: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y: Vec<f64> = x_vals.iter().map(|v| 2.0 * v + 1.0).collect();
        let x = design_with_intercept(&[&x_vals]);
        let result = block_bootstrap_se(&y, &x, 5, 200, 7).unwrap();
        assert_eq!(result.standard_errors, vec![0.0, 0.0]);
        assert_eq!(result.p_values, vec![0.0, 0.0]);
    }

    #[test]
    fn too_short_sample_is_rejected() {
        let x_vals: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = x_vals.clone();
        let x = design_with_intercept(&[&x_vals]);
        assert!(matches!(
            block_bootstrap_se(&y, &x, 6, 200, 7),
            Err(BootstrapError::TooShort { .. })
        ));
    }

    #[test]
    fn seed_determinism_is_bitwise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let gauss = GaussDist::new(0.0, 1.0).unwrap();
        let x_vals: Vec<f64> = (0..120).map(|_| gauss.sample(&mut rng)).collect();
        let y: Vec<f64> = x_vals
            .iter()
            .map(|v| 0.4 * v + gauss.sample(&mut rng))
            .collect();
        let x = design_with_intercept(&[&x_vals]);
        let a = block_bootstrap_se(&y, &x, 5, 150, 99).unwrap();
        let b = block_bootstrap_se(&y, &x, 5, 150, 99).unwrap();
        assert_eq!(
            a.standard_errors
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>(),
            b.standard_errors
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn iid_block_one_tracks_classical_se() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let gauss = GaussDist::new(0.0, 1.0).unwrap();
        let n = 500;
        let x_vals: Vec<f64> = (0..n).map(|_| gauss.sample(&mut rng)).collect();
        let y: Vec<f64> = x_vals
            .iter()
            .map(|v| 1.0 + 0.5 * v + gauss.sample(&mut rng))
            .collect();
        let x = design_with_intercept(&[&x_vals]);
        let classical = crate::ols::ols_fit(&y, &x).unwrap();
        let boot = block_bootstrap_se(&y, &x, 1, 2_000, 5).unwrap();
        for j in 0..2 {
            let rel = (boot.standard_errors[j] - classical.standard_errors[j]).abs()
                / classical.standard_errors[j];
            assert!(
                rel < 0.15,
                "bootstrap SE {} vs classical {} (rel {rel})",
                boot.standard_errors[j],
                classical.standard_errors[j]
            );
        }
    }
}
