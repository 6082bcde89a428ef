use rand::Rng;
use serde::Serialize;

use crate::seeds;

/// Resamples used for bootstrap intervals.
pub const BOOTSTRAP_RESAMPLES: usize = 1_000;

/// A Monte Carlo mean with its standard error and a 95% bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// Mean, standard error and percentile bootstrap interval of i.i.d. values.
    pub fn from_values(values: &[f64], seed: u64) -> Self {
        let (mean, std_error) = mean_and_se(values);
        let (ci_low, ci_high) = bootstrap_ci(values, BOOTSTRAP_RESAMPLES, seed);
        Self { mean, std_error, ci_low, ci_high, samples: values.len() }
    }

    /// Whether `value` lies within `k` standard errors.
    pub fn within_se(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance with its delta-method standard error from the fourth central moment.
pub fn variance_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).max(0.0).sqrt())
}

/// 95% percentile bootstrap interval for the mean.
pub fn bootstrap_ci(values: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = seeds::stream(seed, &[seeds::label("bootstrap")]);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples).map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(0.025), at(0.975))
}

/// C(s, l) / C(L, l): the unbiased estimate of p^l from s successes in L exchangeable trials.
pub fn u_statistic(successes: u64, trials: u64, l: u32) -> f64 {
    (0..l as u64).map(|i| successes.saturating_sub(i) as f64 / (trials - i) as f64).product()
}
