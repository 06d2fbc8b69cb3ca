//! Monte Carlo characteristic functionals `E exp{it f(S_n + a)}` and decay
//! envelopes built from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distribution::{normalized_sum, Distribution};
use crate::error::{invalid, Error, Result};
use crate::estimate::{ols, ComplexAccumulator, ComplexEstimate};
use crate::poly::Polynomial;
use crate::report::{EnvelopePoint, EnvelopeReport};
use crate::seed::{chunked, Rng};

pub const MIN_SAMPLES: usize = 100;

/// Points with `|g| < NOISE_FLOOR * std_error` are treated as noise.
pub const NOISE_FLOOR: f64 = 5.0;

fn check_inputs(dist: &Distribution, f: &dyn Polynomial, n: usize, a: &[f64], n_samples: usize) -> Result<()> {
    dist.validate()?;
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if n_samples < MIN_SAMPLES {
        return invalid(format!("need at least {MIN_SAMPLES} samples, got {n_samples}"));
    }
    if a.len() != f.dimension() {
        return Err(Error::DimensionMismatch { expected: f.dimension(), got: a.len() });
    }
    Ok(())
}

fn draw_value(dist: &Distribution, f: &dyn Polynomial, n: usize, a: &[f64], x: &mut [f64], r: &mut Rng) -> f64 {
    for (xi, ai) in x.iter_mut().zip(a) {
        *xi = normalized_sum(dist, n, r) + ai;
    }
    f.eval_unchecked(x)
}

/// Monte Carlo estimate of `E exp{it f(S_n + a)}`, where the coordinates of
/// `S_n` are independent normalized sums of draws from `dist`.
pub fn cf_empirical(
    dist: &Distribution,
    f: &dyn Polynomial,
    n: usize,
    a: &[f64],
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ComplexEstimate> {
    Ok(cf_empirical_grid(dist, f, n, a, &[t], n_samples, seed)?.remove(0))
}

/// Estimates on a whole `t` grid from one common sample of `f(S_n + a)`.
pub fn cf_empirical_grid(
    dist: &Distribution,
    f: &dyn Polynomial,
    n: usize,
    a: &[f64],
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<ComplexEstimate>> {
    check_inputs(dist, f, n, a, n_samples)?;
    let parts = chunked(n_samples, seed, |r, len| {
        let mut x = vec![0.0; a.len()];
        let values: Vec<f64> = (0..len).map(|_| draw_value(dist, f, n, a, &mut x, r)).collect();
        t_grid
            .iter()
            .map(|&t| {
                let mut acc = ComplexAccumulator::default();
                for v in &values {
                    let (s, c) = (t * v).sin_cos();
                    acc.push(Complex64::new(c, s));
                }
                acc
            })
            .collect::<Vec<_>>()
    });
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if t == 0.0 {
                let mut e = ComplexEstimate::exact(Complex64::new(1.0, 0.0));
                e.n_samples = n_samples;
                return e;
            }
            parts.iter().fold(ComplexAccumulator::default(), |acc, p| acc.merge(&p[i])).finish()
        })
        .collect())
}

/// Model `|g(t)| <= c |t|^{-d}` tested by a decay envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub c: f64,
    pub d: f64,
}

/// Builds a decay report from estimates on `t_grid`.
///
/// The statistic is `|g(t)| |t|^d / c`, checked against 1. Points below the
/// noise floor are inconclusive and excluded from the exponent fit, which is
/// an OLS of `ln|g|` on `ln|t|` over the top decade of the grid.
pub fn decay_report(name: &str, t_grid: &[f64], estimates: &[ComplexEstimate], model: DecayModel) -> EnvelopeReport {
    let t_top = t_grid.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let points = t_grid
        .iter()
        .zip(estimates)
        .map(|(&t, e)| {
            let g = e.norm();
            let stat = g * t.abs().powf(model.d) / model.c;
            if g < NOISE_FLOOR * e.std_error {
                return EnvelopePoint::inconclusive(t, stat, None, Some(1.0));
            }
            if t.abs() >= t_top / 10.0 {
                xs.push(t.abs().ln());
                ys.push(g.ln());
            }
            EnvelopePoint::checked(t, stat, None, Some(1.0))
        })
        .collect();
    let mut report = EnvelopeReport::new(name, points);
    match ols(&xs, &ys) {
        Some(fit) => {
            report = report
                .with_extra("slope", fit.slope)
                .with_extra("slope_se", fit.slope_se)
                .with_extra("intercept", fit.intercept)
                .with_extra("fit_points", fit.n_points as f64);
        }
        None => report = report.with_note("too few informative points in the top decade for an exponent fit"),
    }
    report
}

/// Empirical decay envelope of `E exp{it f(S_n + a)}` over `t_grid`.
#[allow(clippy::too_many_arguments)]
pub fn decay_envelope(
    dist: &Distribution,
    f: &dyn Polynomial,
    n: usize,
    a: &[f64],
    t_grid: &[f64],
    model: DecayModel,
    n_samples: usize,
    seed: u64,
) -> Result<EnvelopeReport> {
    if t_grid.iter().any(|t| !(t.abs() >= 1.0)) {
        return invalid("t grid must satisfy |t| >= 1");
    }
    if !(model.c > 0.0) {
        return invalid("model prefactor must be positive");
    }
    let est = cf_empirical_grid(dist, f, n, a, t_grid, n_samples, seed)?;
    Ok(decay_report("decay-envelope", t_grid, &est, model))
}

/// Smallest power `k` with `k >= ln(2 / (3^eps - 1)) / 0.027`.
pub fn cantor_power_threshold(eps: f64) -> u32 {
    ((2.0 / (3f64.powf(eps) - 1.0)).ln() / 0.027).ceil() as u32
}
