//! `E exp{it Z_1 ... Z_k}` for independent standard normal `Z_i`.
//!
//! With `g_1(s) = exp(-s^2/2)` and `g_k(s) = E g_{k-1}(sZ)`, the value is
//! `g_k(t)`. The law of the product is symmetric, so `g_k` is real and even.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::StandardNormal;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimate::{ComplexAccumulator, ComplexEstimate};
use crate::quad::integrate_pieces;
use crate::report::{EnvelopePoint, EnvelopeReport};
use crate::seed::chunked;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianCfMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

const Z_MAX: f64 = 40.0;
const MAX_QUAD_K: usize = 4;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Breakpoints `0, c, 2c, 4c, ..., 40` with `c = 1/sqrt(1+s^2)`, separating the
/// `1/s` scale of the inner function from the unit scale of the weight.
fn breakpoints(s: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = 1.0 / (1.0 + s * s).sqrt();
    while x < Z_MAX {
        b.push(x);
        x *= 2.0;
    }
    b.push(Z_MAX);
    b
}

/// `g_k(s)` by nested quadrature. The inner `g_2` uses its closed form
/// `(1+s^2)^{-1/2}` unless `k == 2` is the requested level itself.
fn g_quad(k: usize, s: f64, tol: f64, top: bool) -> f64 {
    match k {
        1 => (-0.5 * s * s).exp(),
        2 if !top => 1.0 / (1.0 + s * s).sqrt(),
        _ => {
            let r = integrate_pieces(
                |z: f64| 2.0 * phi(z) * g_quad(k - 1, s * z, tol, false),
                &breakpoints(s),
                tol * 1e-3,
                tol,
                200,
            );
            r.value
        }
    }
}

/// Estimate of `E exp{it Z_1 ... Z_k}`.
///
/// `closed_form` covers `k <= 2`, `quadrature` covers `k <= 4`; `monte_carlo`
/// uses `n_samples` draws from `seed`.
pub fn gaussian_monomial_cf(
    k: usize,
    t: f64,
    method: GaussianCfMethod,
    n_samples: usize,
    seed: u64,
) -> Result<ComplexEstimate> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    match method {
        GaussianCfMethod::ClosedForm => match k {
            1 => Ok(ComplexEstimate::exact(Complex64::new((-0.5 * t * t).exp(), 0.0))),
            2 => Ok(ComplexEstimate::exact(Complex64::new(1.0 / (1.0 + t * t).sqrt(), 0.0))),
            _ => invalid(format!("no closed form for k = {k}")),
        },
        GaussianCfMethod::Quadrature => {
            if k > MAX_QUAD_K {
                return invalid(format!("quadrature supports k <= {MAX_QUAD_K}, got {k}"));
            }
            Ok(ComplexEstimate::exact(Complex64::new(g_quad(k, t.abs(), 1e-11, true), 0.0)))
        }
        GaussianCfMethod::MonteCarlo => {
            if n_samples < 100 {
                return invalid("monte carlo needs at least 100 samples");
            }
            let parts = chunked(n_samples, seed, |r, len| {
                let mut acc = ComplexAccumulator::default();
                for _ in 0..len {
                    let p: f64 = (0..k).map(|_| r.sample::<f64, _>(StandardNormal)).product();
                    let x = t * p;
                    acc.push(Complex64::new(x.cos(), x.sin()));
                }
                acc
            });
            Ok(parts.iter().fold(ComplexAccumulator::default(), |a, b| a.merge(b)).finish())
        }
    }
}

/// `|E exp{itZ_1...Z_k}| |t| / ln^{k-2}(2+|t|)` on `t_grid` by quadrature.
///
/// The report carries the empirical min and max as candidate constants; for
/// `k = 2` the points are checked against `[0.707, 1]`.
pub fn theorem4_envelope(k: usize, t_grid: &[f64]) -> Result<EnvelopeReport> {
    if !(2..=MAX_QUAD_K).contains(&k) {
        return invalid(format!("k must be in 2..={MAX_QUAD_K}"));
    }
    if t_grid.iter().any(|t| !(t.abs() >= 1.0)) {
        return invalid("t grid must satisfy |t| >= 1");
    }
    use rayon::prelude::*;
    let points: Vec<EnvelopePoint> = t_grid
        .par_iter()
        .map(|&t| {
            let g = gaussian_monomial_cf(k, t, GaussianCfMethod::Quadrature, 0, 0).map(|e| e.norm()).unwrap_or(f64::NAN);
            let stat = g * t.abs() / (2.0 + t.abs()).ln().powi(k as i32 - 2);
            let (lo, hi) = if k == 2 { (Some(0.707), Some(1.0)) } else { (Some(0.0), None) };
            let mut p = EnvelopePoint::checked(t, stat, lo, hi);
            p.pass &= stat > 0.0;
            p
        })
        .collect();
    let r = EnvelopeReport::new(format!("theorem4-k{k}"), points);
    let (min, max) = (r.summary.min, r.summary.max);
    Ok(r.with_extra("l_k_candidate", min).with_extra("L_k_candidate", max).with_extra("ratio", max / min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_is_normal_cf() {
        for t in [0.0, 0.5, 3.0] {
            let v = gaussian_monomial_cf(1, t, GaussianCfMethod::ClosedForm, 0, 0).unwrap();
            assert!((v.value.re - (-0.5 * t * t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn k2_quadrature_matches_closed_form() {
        for i in 0..=200 {
            let t = 0.5 * i as f64;
            let q = gaussian_monomial_cf(2, t, GaussianCfMethod::Quadrature, 0, 0).unwrap().value.re;
            assert!((q - 1.0 / (1.0 + t * t).sqrt()).abs() < 1e-8, "t={t} q={q}");
        }
    }

    #[test]
    fn k2_at_one() {
        let v = gaussian_monomial_cf(2, 1.0, GaussianCfMethod::Quadrature, 0, 0).unwrap();
        assert!((v.value.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn unsupported_pairs_rejected() {
        assert!(gaussian_monomial_cf(3, 1.0, GaussianCfMethod::ClosedForm, 0, 0).is_err());
        assert!(gaussian_monomial_cf(5, 1.0, GaussianCfMethod::Quadrature, 0, 0).is_err());
        assert!(gaussian_monomial_cf(2, 1.0, GaussianCfMethod::MonteCarlo, 10, 0).is_err());
        assert!(gaussian_monomial_cf(0, 1.0, GaussianCfMethod::Quadrature, 0, 0).is_err());
    }

    #[test]
    fn conjugate_symmetry() {
        for k in 1..=3 {
            for t in [0.3, 2.0, 7.0] {
                let a = gaussian_monomial_cf(k, t, GaussianCfMethod::Quadrature, 0, 0).unwrap().value;
                let b = gaussian_monomial_cf(k, -t, GaussianCfMethod::Quadrature, 0, 0).unwrap().value;
                assert!((a - b.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn theorem4_k2_statistic_in_range() {
        let grid: Vec<f64> = (0..60).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let r = theorem4_envelope(2, &grid).unwrap();
        assert!(r.all_pass());
        assert!(r.summary.min >= 0.707 && r.summary.max < 1.0);
        assert!(theorem4_envelope(2, &[0.5]).is_err());
    }
}
