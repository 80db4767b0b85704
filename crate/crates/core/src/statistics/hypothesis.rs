//! Goodness-of-fit helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::special;

/// Kolmogorov–Smirnov distance between the standardized sample and `N(0,1)`.
///
/// The sample is centered and scaled by its own mean and standard
/// deviation (Lilliefors setting); `None` for fewer than two values or zero spread.
pub fn ks_normal_statistic(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let (mean, var) = mean_and_variance(values);
    if !(var > 0.0) {
        return None;
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let nf = n as f64;
    Some(z.iter().enumerate().fold(0.0f64, |d, (i, &zi)| {
        let f = special::normal_cdf(zi);
        d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf)
    }))
}

/// Asymptotic 5% critical value `1.36/√n`.
pub fn ks_threshold_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standard error of the unbiased sample variance, from the fourth central moment.
pub fn variance_standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 4 {
        return f64::INFINITY;
    }
    let (mean, var) = mean_and_variance(values);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Pearson chi-square test of observed counts against expected counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// `dof = bins - 1 - fitted_parameters`.
pub fn chi_square(observed: &[u64], expected: &[f64], fitted_parameters: usize) -> ChiSquareResult {
    assert_eq!(observed.len(), expected.len(), "observed and expected bin counts differ");
    let statistic = observed
        .iter()
        .zip(expected)
        .filter(|(_, e)| **e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = observed.len().saturating_sub(1 + fitted_parameters).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquareResult { statistic, dof, p_value: dist.sf(statistic) }
}
