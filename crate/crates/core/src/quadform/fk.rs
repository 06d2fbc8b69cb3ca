//! The head density `f_k`, its closed-form upper bounds, and the tilt weight
//! `W = E exp{R / 2 sigma_1^2}` with the thresholds built from the tail.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::spec::HilbertGaussianSpec;
use crate::error::{invalid, Result};

/// Relative size of the Poisson-mixture tail at which summation stops.
const SERIES_RTOL: f64 = 1e-17;

/// `ln` of the density of the scaled noncentral chi-square law
/// `sum_{i<=k} (Y_i - a_i)^2`, `Y_i ~ N(0, s1)`, with `lambda = |a_k|^2`.
///
/// The noncentral case sums the Poisson mixture of central densities in log
/// space, starting at the largest term and walking outwards; successive term
/// ratios are monotone on each side, which gives a geometric tail bound.
pub fn ln_noncentral_fk(u: f64, k: usize, s1: f64, lambda: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return invalid("u must be nonnegative");
    }
    if k < 1 || !(s1 > 0.0) || !(lambda >= 0.0) {
        return invalid("need k >= 1, s1 > 0 and lambda >= 0");
    }
    let x = u / s1;
    let delta = lambda / s1;
    let half_k = k as f64 / 2.0;
    if x == 0.0 {
        return Ok(match k {
            1 => f64::INFINITY,
            2 => -delta / 2.0 - (2.0 * s1).ln(),
            _ => f64::NEG_INFINITY,
        });
    }
    let ln_central = |nu_half: f64| (nu_half - 1.0) * x.ln() - x / 2.0 - nu_half * 2f64.ln() - ln_gamma(nu_half);
    if delta == 0.0 {
        return Ok(ln_central(half_k) - s1.ln());
    }
    let ln_term = |j: f64| -delta / 2.0 + j * (delta / 2.0).ln() - ln_gamma(j + 1.0) + ln_central(half_k + j);
    // ratio t_{j+1}/t_j = delta x / (4 (j+1)(k/2+j)), decreasing in j
    let c = delta * x / 4.0;
    let b = half_k + 1.0;
    let root = (-b + (b * b - 4.0 * (half_k - c)).sqrt()) / 2.0;
    let mode = if root.is_finite() { root.max(0.0).floor() } else { 0.0 };
    let ln_top = ln_term(mode);
    let mut sum = 1.0;
    // upward
    let mut j = mode;
    let mut rel = 1.0;
    loop {
        let ratio = c / ((j + 1.0) * (half_k + j));
        rel *= ratio;
        j += 1.0;
        sum += rel;
        let next_ratio = c / ((j + 1.0) * (half_k + j));
        if next_ratio < 1.0 && rel * next_ratio / (1.0 - next_ratio) < SERIES_RTOL * sum {
            break;
        }
    }
    // downward
    let mut j = mode;
    let mut rel = 1.0;
    while j >= 1.0 {
        // t_{j-1}/t_j = 4 j (k/2 + j - 1) / (delta x), decreasing as j falls
        let ratio = 4.0 * j * (half_k + j - 1.0) / (delta * x);
        rel *= ratio;
        j -= 1.0;
        sum += rel;
        if ratio < 1.0 && rel * ratio / (1.0 - ratio) * 2.0 < SERIES_RTOL * sum {
            break;
        }
    }
    Ok(ln_top + sum.ln() - s1.ln())
}

pub fn noncentral_fk(u: f64, k: usize, s1: f64, lambda: f64) -> Result<f64> {
    ln_noncentral_fk(u, k, s1, lambda).map(f64::exp)
}

/// `c_1(k) = pi^{-1/2} + ((k-1)/2)^{(k-1)/2} / Gamma(k/2)`.
pub fn c1(k: usize) -> f64 {
    let h = (k as f64 - 1.0) / 2.0;
    let lead = if h == 0.0 { 1.0 } else { (h * h.ln() - ln_gamma(k as f64 / 2.0)).exp() };
    PI.powf(-0.5) + lead
}

/// The two closed-form upper bounds on `f_k(u)`; the second needs `|a_k| > 0`.
pub fn fk_upper_bounds(u: f64, k: usize, s1: f64, a_norm: f64) -> Result<(f64, Option<f64>)> {
    if !(u > 0.0) || k < 1 || !(s1 > 0.0) || !(a_norm >= 0.0) {
        return invalid("need u > 0, k >= 1, s1 > 0, |a| >= 0");
    }
    let kf = k as f64;
    let expo = -(u.sqrt() - a_norm).powi(2) / (2.0 * s1);
    let ln_a = -(2.0 * s1).ln() - ln_gamma(kf / 2.0) + (kf / 2.0 - 1.0) * (u / (2.0 * s1)).ln() + expo;
    let b = (a_norm > 0.0).then(|| {
        (c1(k).ln() - 0.5 * s1.ln() + (kf - 3.0) / 4.0 * u.ln() - (kf - 1.0) / 2.0 * a_norm.ln() + expo).exp()
    });
    Ok((ln_a.exp(), b))
}

/// `ER`, `W` and the lower-bound thresholds of a spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFunctionals {
    pub er: f64,
    pub w: f64,
    pub ln_w: f64,
    pub u0: f64,
    /// Threshold for `k = 3`.
    pub u_star: f64,
    /// Threshold for `k >= 4` with `|a_3|^2` as printed; `None` for `k <= 3`.
    pub u_double_star: Option<f64>,
    /// The same threshold with `|a_k|^2` in place of `|a_3|^2`.
    pub u_double_star_ak: Option<f64>,
}

impl TailFunctionals {
    /// The threshold above which the lower bound applies, if any.
    pub fn lower_threshold(&self, k: usize, use_head_norm: bool) -> Option<f64> {
        match k {
            3 => Some(self.u_star),
            k if k >= 4 => {
                if use_head_norm {
                    self.u_double_star_ak
                } else {
                    self.u_double_star
                }
            }
            _ => None,
        }
    }
}

/// Computes the tail functionals; geometric continuations are summed until a
/// geometric bound on the remaining log-factors is below `tol`.
pub fn tilt_weight(spec: &HilbertGaussianSpec, tol: f64) -> Result<TailFunctionals> {
    spec.validate()?;
    let s1 = spec.s1();
    let tol = if tol > 0.0 { tol } else { 1e-15 };
    let log_factor = |v: f64, a2: f64| -0.5 * (-v / s1).ln_1p() + a2 / (2.0 * (s1 - v));
    let mut er = 0.0;
    let mut ln_w = 0.0;
    for (v, a2) in spec.explicit_tail() {
        er += v + a2;
        ln_w += log_factor(v, a2);
    }
    if let Some(rho) = spec.geometric_ratio {
        let base = spec.continuation_base();
        er += base * rho / (1.0 - rho) + spec.tail_shift_remainder;
        let mut i = 1;
        loop {
            let (v, a2) = spec.continuation_term(i).expect("ratio present");
            ln_w += log_factor(v, a2);
            // the remaining terms are at most rho^n times the bound for term i+1
            let (vn, an) = spec.continuation_term(i + 1).expect("ratio present");
            let y = vn / s1;
            let next_bound = 0.5 * y / (1.0 - y) + an / (2.0 * (s1 - vn));
            if next_bound / (1.0 - rho) < tol {
                break;
            }
            i += 1;
        }
    }
    let k = spec.k as f64;
    let x1 = spec.first_tail_variance() / s1;
    let u0 = 2.0 * k * (1.0 - x1).powi(-2) * er;
    let a3 = spec.a3_norm_sq();
    let ak = spec.head_norm_sq();
    let s1_4 = s1 * s1;
    let u_star = 4.9 * u0 + 16.94 * a3 / s1_4 * u0 * u0;
    let dstar = |a: f64| 5.625 * (k - 1.0).powi(2) / (k - 3.0) * u0 + 16.0 * a / s1_4 * u0 * u0 / (k - 3.0).powi(2);
    let (uds, uds_ak) = if spec.k >= 4 { (Some(dstar(a3)), Some(dstar(ak))) } else { (None, None) };
    Ok(TailFunctionals { er, w: ln_w.exp(), ln_w, u0, u_star, u_double_star: uds, u_double_star_ak: uds_ak })
}
