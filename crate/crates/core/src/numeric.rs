//! Small numerical helpers shared by the estimators.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(values);
    acc.total()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance, two-pass.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, 0.0);
    }
    (m, (sample_variance(values) / n as f64).sqrt())
}

/// A scalar estimate with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    pub fn from_samples(values: &[f64]) -> Self {
        let (value, std_error) = mean_and_se(values);
        Self { value, std_error }
    }

    /// `|self - other| <= k * sqrt(se_1^2 + se_2^2)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * pooled_se(self.std_error, other.std_error)
    }

    /// `|self - target| <= k * se`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

pub fn pooled_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// SplitMix64 finaliser, used to derive independent master seeds from a
/// parent seed and a tag.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    let mut z = parent ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of a (weighted) straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
}

/// Weighted least squares. `weights` are inverse variances; when the
/// weights are exact the returned standard errors are the usual
/// `sqrt(diag((X^T W X)^{-1}))`.
pub fn weighted_line_fit(x: &[f64], y: &[f64], weights: &[f64]) -> Option<LineFit> {
    if x.len() != y.len() || x.len() != weights.len() || x.len() < 2 {
        return None;
    }
    let sw = compensated_sum(weights.iter().copied());
    let swx = compensated_sum(weights.iter().zip(x).map(|(w, x)| w * x));
    let swy = compensated_sum(weights.iter().zip(y).map(|(w, y)| w * y));
    let swxx = compensated_sum(weights.iter().zip(x).map(|(w, x)| w * x * x));
    let swxy = compensated_sum(
        weights
            .iter()
            .zip(x.iter().zip(y))
            .map(|(w, (x, y))| w * x * y),
    );
    let det = sw * swxx - swx * swx;
    if !(det.is_finite() && det > 0.0) {
        return None;
    }
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swxx * swy - swx * swxy) / det;
    Some(LineFit {
        intercept,
        slope,
        intercept_se: (swxx / det).sqrt(),
        slope_se: (sw / det).sqrt(),
    })
}

/// Ordinary least squares slope of `ln y` against `ln x`, skipping
/// non-positive entries.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    let w = vec![1.0; lx.len()];
    weighted_line_fit(&lx, &ly, &w).map(|f| f.slope)
}

/// Poisson probabilities `P(N = n)` for `n = 0..=n_max`, computed in log
/// space so large means do not underflow the leading term.
pub fn poisson_pmf_table(mean: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    if mean == 0.0 {
        out.push(1.0);
        out.resize(n_max + 1, 0.0);
        return out;
    }
    let ln_mean = mean.ln();
    let mut ln_fact = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        out.push((n as f64 * ln_mean - mean - ln_fact).exp());
    }
    out
}

/// Upper tail `P(N > n)` of a Poisson law, summed directly from the tail
/// so it is accurate far below machine epsilon.
pub fn poisson_upper_tail(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut k = n + 1;
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    let mut term = (k as f64 * ln_mean - mean - ln_fact).exp();
    let mut total = 0.0;
    loop {
        total += term;
        k += 1;
        term *= mean / k as f64;
        if term < total * 1e-17 || term == 0.0 {
            if (k as f64) > mean {
                break;
            }
        }
        if k > n + 100_000 {
            break;
        }
    }
    total
}
