use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};

/// One-sample Kolmogorov-Smirnov statistic against a continuous reference
/// CDF: `max_i max(|i/m - F(v_i)|, |(i-1)/m - F(v_i)|)` over sorted `v`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("KS distance needs at least one sample"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("KS distance: NaN sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        let above = ((i + 1) as f64 / m - f).abs();
        let below = (f - i as f64 / m).abs();
        d = d.max(above).max(below);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; 0 for an exact fit or exactly 2 points.
    pub slope_se: f64,
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("slope fit needs at least two distinct x values"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(SlopeFit {
        slope,
        intercept,
        slope_se: (ssr / (m - 2.0) / sxx).sqrt(),
        points: points.len(),
    })
}

/// Two-sided normal quantile for 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `events` successes out of `trials`.
pub fn wilson_interval(events: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let m = trials as f64;
    let p = events as f64 / m;
    let z2 = z * z;
    let denom = 1.0 + z2 / m;
    let center = (p + z2 / (2.0 * m)) / denom;
    let half = z / denom * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt();
    // Clamp so the interval always holds the point estimate.
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Linear-interpolation sample quantile of sorted data.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Summary {
        min: s[0],
        q05: sorted_quantile(&s, 0.05),
        median: sorted_quantile(&s, 0.5),
        q95: sorted_quantile(&s, 0.95),
        max: s[s.len() - 1],
    }
}

/// Probability levels `(lo, hi)` such that the sample median of `m` iid
/// draws lies between the population `lo`- and `hi`-quantiles with
/// probability at least 95%.
///
/// The k-th order statistic sits at population level `Beta(k, m - k + 1)`;
/// the median is bracketed by orders `floor((m+1)/2)` and `ceil((m+1)/2)`.
pub fn median_band_levels(m: usize) -> (f64, f64) {
    let m = m.max(1);
    let k_lo = m.div_ceil(2) as f64;
    let k_hi = (m / 2 + 1) as f64;
    let mf = m as f64;
    let lo = Beta::new(k_lo, mf - k_lo + 1.0)
        .map(|b| b.inverse_cdf(0.025))
        .unwrap_or(0.0);
    let hi = Beta::new(k_hi, mf - k_hi + 1.0)
        .map(|b| b.inverse_cdf(0.975))
        .unwrap_or(1.0);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use approx::assert_relative_eq;

    #[test]
    fn ks_stratified_grid() {
        let m = 200;
        let samples: Vec<f64> = (1..=m).map(|i| (i as f64 - 0.5) / m as f64).collect();
        assert_relative_eq!(
            ks_distance(&samples, |x| x).unwrap(),
            0.5 / m as f64,
            max_relative = 1e-12
        );
    }

    #[test]
    fn ks_single_sample() {
        assert_eq!(ks_distance(&[0.0], |x| 0.5 + x).unwrap(), 0.5);
        assert_eq!(ks_distance(&[0.3], |x| x).unwrap(), 0.7);
        assert!(ks_distance(&[], |x| x).is_err());
    }

    #[test]
    fn ks_uniform_samples() {
        let mut s = RandomStream::new(17);
        let samples: Vec<f64> = (0..10_000).map(|_| s.uniform()).collect();
        // Asymptotic KS 0.999 point: 1.95 / sqrt(m).
        assert!(ks_distance(&samples, |x| x).unwrap() < 0.0272);
    }

    #[test]
    fn slope_exact_lines() {
        let f = fit_log_slope(&[(1.0, 2.0), (2.0, 1.0), (3.0, 0.0)]).unwrap();
        assert_relative_eq!(f.slope, -1.0, max_relative = 1e-15);
        assert!(f.slope_se < 1e-15);
        let f = fit_log_slope(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]).unwrap();
        assert_relative_eq!(f.slope, 2.0, max_relative = 1e-15);
        assert!(fit_log_slope(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(fit_log_slope(&[(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn slope_recovered_from_noisy_line() {
        // Synthetic regression: y = 0.7 x - 1 + N(0, 0.2^2).
        let mut s = RandomStream::new(8);
        let mut hits = 0;
        for _ in 0..200 {
            let pts: Vec<(f64, f64)> = (0..12)
                .map(|i| {
                    let x = i as f64;
                    let e: f64 = s.sample(rand_distr::StandardNormal);
                    (x, 0.7 * x - 1.0 + 0.2 * e)
                })
                .collect();
            let f = fit_log_slope(&pts).unwrap();
            if (f.slope - 0.7).abs() < 3.0 * f.slope_se {
                hits += 1;
            }
        }
        // Coverage of a 3-SE t-interval with 10 dof is about 98.7%.
        assert!(hits >= 190, "hits = {hits}");
    }

    #[test]
    fn wilson_contains_estimate() {
        for (k, m) in [(0u64, 100u64), (1, 100_000), (50, 100), (100, 100), (7, 13)] {
            let (lo, hi) = wilson_interval(k, m, Z95);
            let p = k as f64 / m as f64;
            assert!(lo <= p && p <= hi && (0.0..=1.0).contains(&lo) && hi <= 1.0);
        }
        // Known value: 10 / 100 -> (0.0552, 0.1744).
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.05523).abs() < 1e-4 && (hi - 0.17437).abs() < 1e-4);
    }

    #[test]
    fn quantiles_and_band() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(sorted_quantile(&s, 0.5), 2.5);
        assert_eq!(sorted_quantile(&s, 0.0), 1.0);
        let (lo, hi) = median_band_levels(500);
        assert!((lo - (0.5 - Z95 * 0.5 / 500f64.sqrt())).abs() < 3e-3);
        assert!((hi - (0.5 + Z95 * 0.5 / 500f64.sqrt())).abs() < 3e-3);
    }
}
