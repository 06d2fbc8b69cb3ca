//! Monte Carlo estimates with standard errors, and least-squares line fits.

use num_complex::Complex64;
use serde::Serialize;

/// Monte Carlo estimate of a complex expectation.
///
/// `std_error` is the jackknife standard error of the sample mean, which for
/// a plain average coincides with `sqrt(sum |z_i - mean|^2 / (n (n - 1)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl ComplexEstimate {
    pub fn exact(value: Complex64) -> Self {
        ComplexEstimate { value, std_error: 0.0, n_samples: 1 }
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }
}

/// Monte Carlo estimate of a real expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Running sums for a complex sample mean; merge chunk results in order.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexAccumulator {
    n: usize,
    sum: Complex64,
    sum_sq: f64,
}

impl ComplexAccumulator {
    pub fn push(&mut self, z: Complex64) {
        self.n += 1;
        self.sum += z;
        self.sum_sq += z.norm_sqr();
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn finish(&self) -> ComplexEstimate {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean.norm_sqr()) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        ComplexEstimate { value: mean, std_error: (var / n).sqrt(), n_samples: self.n }
    }
}

/// Running sums for a real sample mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct RealAccumulator {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl RealAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn finish(&self) -> RealEstimate {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        RealEstimate { value: mean, std_error: (var / n).sqrt(), n_samples: self.n }
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub n_points: usize,
}

/// Fits a line by OLS. Returns `None` for fewer than two distinct abscissae.
pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = x[..n].iter().map(|&v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = x[..n]
            .iter()
            .zip(&y[..n])
            .map(|(&a, &b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit { slope, intercept, slope_se, n_points: n })
}
