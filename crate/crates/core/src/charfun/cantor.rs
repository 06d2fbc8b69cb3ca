//! The symmetric Cantor law and its characteristic function
//! `L(t) = prod_{j>=1} cos(2 pi 3^-j t)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::report::{EnvelopePoint, EnvelopeReport};

/// `e^{-0.027}`, the uniform bound on `|L(t)|` for `|t| >= 8.5`.
pub fn cramer_bound() -> f64 {
    (-0.027f64).exp()
}

/// Number of factors kept so that the dropped tail moves `L(t)` by less than
/// `tol`.
///
/// With `theta_j = 2 pi 3^-j |t|` and `|cos x - 1| <= x^2 / 2`, the tail after
/// `J` factors is within `(pi^2 / 4) t^2 9^-J` of 1.
pub fn truncation_index(t: f64, tol: f64) -> usize {
    let lead = t.abs().max(1.0).log(3.0).ceil();
    let tail = ((PI * PI / tol).log(3.0).ceil() / 2.0).ceil();
    (lead + tail.max(0.0)) as usize + 2
}

/// Bound on `|L(t) - L_J(t)|` after `j` factors.
pub fn truncation_error(t: f64, j: usize) -> f64 {
    PI * PI / 4.0 * t * t * 9f64.powi(-(j as i32))
}

pub fn cantor_cf_truncated(t: f64, j: usize) -> f64 {
    let mut theta = 2.0 * PI * t;
    let mut prod = 1.0;
    for _ in 0..j {
        theta /= 3.0;
        prod *= theta.cos();
    }
    prod
}

pub fn cantor_cf(t: f64, tol: f64) -> f64 {
    let tol = if tol > 0.0 { tol } else { 1e-15 };
    cantor_cf_truncated(t, truncation_index(t, tol))
}

/// Scan of `|L(t)|` on `t_min, t_min + step, ...` against a constant upper
/// bound.
pub fn cantor_scan(t_min: f64, t_max: f64, step: f64, tol: f64, upper: f64) -> Result<EnvelopeReport> {
    if !(t_min < t_max) || !(step > 0.0) || !(tol > 0.0) {
        return invalid("cantor scan needs t_min < t_max, step > 0 and tol > 0");
    }
    let n = ((t_max - t_min) / step + 1e-9).floor() as usize + 1;
    let points: Vec<EnvelopePoint> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = t_min + step * i as f64;
            EnvelopePoint::checked(t, cantor_cf(t, tol).abs(), None, Some(upper))
        })
        .collect();
    let report = EnvelopeReport::new("cantor-scan", points);
    let (argmax, max) = (report.summary.argmax, report.summary.max);
    Ok(report.with_extra("argmax", argmax).with_extra("max_abs_l", max).with_extra("upper", upper))
}

/// The Cramer-type scan with upper bound `e^{-0.027}`, valid for `t_min >= 8.5`.
pub fn cantor_cramer_scan(t_min: f64, t_max: f64, step: f64, tol: f64) -> Result<EnvelopeReport> {
    if t_min < 8.5 {
        return invalid(format!("the bound e^-0.027 needs t_min >= 8.5, got {t_min}"));
    }
    cantor_scan(t_min, t_max, step, tol, cramer_bound())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_at_zero() {
        assert_eq!(cantor_cf(0.0, 1e-12), 1.0);
    }

    #[test]
    fn functional_equation_on_grid() {
        for i in 1..=1000 {
            let t = 0.1 * i as f64;
            let lhs = cantor_cf(3.0 * t, 1e-15);
            let rhs = (2.0 * PI * t).cos() * cantor_cf(t, 1e-15);
            assert!((lhs - rhs).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn unit_interval_scan_with_trivial_bound() {
        let r = cantor_scan(0.0, 1.0, 0.01, 1e-12, 1.0).unwrap();
        assert!(r.all_pass());
        assert_eq!(r.points.len(), 101);
    }

    #[test]
    fn cramer_scan_short_range() {
        let r = cantor_cramer_scan(8.5, 100.0, 0.01, 1e-10).unwrap();
        assert!(r.all_pass());
        assert!(r.summary.max < 0.97336);
        assert!(cantor_cramer_scan(1.0, 10.0, 0.1, 1e-10).is_err());
    }

    #[test]
    fn truncation_error_is_below_tol() {
        for t in [0.5, 10.0, 1e3, 1e6] {
            for tol in [1e-4, 1e-10, 1e-15] {
                assert!(truncation_error(t, truncation_index(t, tol)) < tol);
            }
        }
    }

    proptest! {
        #[test]
        fn doubling_j_is_stable(t in -1e4f64..1e4, e in 3i32..14) {
            let tol = 10f64.powi(-e);
            let j = truncation_index(t, tol);
            let a = cantor_cf_truncated(t, j);
            let b = cantor_cf_truncated(t, 2 * j);
            prop_assert!((a - b).abs() < tol);
        }
    }
}
