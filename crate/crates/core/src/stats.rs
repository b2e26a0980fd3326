//! Small numeric helpers shared across the crate.
//!
//! Percentile conventions matter here: window breakpoints and summary
//! statistics use linear interpolation, while winsorization uses the
//! nearest-rank (inverted CDF) definition so that clamping is idempotent.

/// Arithmetic mean. Returns NaN for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n-1 denominator). NaN when fewer than 2 points.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sample standard deviation (n-1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Linear-interpolation percentile of a **sorted** slice, `p` in [0, 100].
///
/// Matches the common "linear" definition: rank = p/100 * (n-1), value
/// interpolated between the two straddling order statistics.
pub fn percentile_interpolated(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Nearest-rank percentile (inverted CDF, "type 1") of a **sorted** slice.
///
/// Returns the smallest order statistic whose cumulative proportion is at
/// least p/100. Used by winsorization: clamping to these values and
/// re-clamping is a fixed point.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Median via linear interpolation (sorts a copy).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in median"));
    percentile_interpolated(&v, 50.0)
}

/// Sample Pearson correlation. NaN if either input is constant or lengths
/// differ or fewer than 2 points.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Lag-1 autocorrelation as the Pearson correlation of (x_t, x_{t+1}).
/// None when fewer than 3 points or either lagged slice is constant.
pub fn lag1_autocorrelation(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let r = pearson(&xs[..xs.len() - 1], &xs[1..]);
    if r.is_nan() {
        None
    } else {
        Some(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_and_sd_basic() {
        assert_abs_diff_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        // sample sd of 1,2,3 is exactly 1
        assert_abs_diff_eq!(sample_sd(&[1.0, 2.0, 3.0]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn interpolated_percentile_endpoints() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_abs_diff_eq!(percentile_interpolated(&v, 0.0), 1.0);
        assert_abs_diff_eq!(percentile_interpolated(&v, 100.0), 100.0);
        // rank 0.5*99 = 49.5 -> between 50 and 51
        assert_abs_diff_eq!(percentile_interpolated(&v, 50.0), 50.5);
    }

    #[test]
    fn nearest_rank_percentile_hits_order_statistics() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 5.0), 5.0);
        assert_eq!(percentile_nearest_rank(&v, 95.0), 95.0);
        assert_eq!(percentile_nearest_rank(&v, 100.0), 100.0);
    }

    #[test]
    fn median_even_count_interpolates() {
        assert_abs_diff_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn pearson_perfect_lines() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_abs_diff_eq!(pearson(&x, &y), 1.0, epsilon = 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson(&x, &z), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn autocorrelation_alternating_is_minus_one() {
        let xs = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert_abs_diff_eq!(lag1_autocorrelation(&xs).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn autocorrelation_constant_is_undefined() {
        assert!(lag1_autocorrelation(&[2.0, 2.0, 2.0, 2.0]).is_none());
    }
}
