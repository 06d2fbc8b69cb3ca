//! Grid checks of the density sandwich `f_k W / 8 <= p <= f_k W` and of the
//! normalized tail envelope.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fk::{ln_noncentral_fk, tilt_weight, TailFunctionals};
use super::inversion::{ln_density, ln_survival, smoothed_density, tail_prob, Cgf, InversionParams, TailMethod};
use super::mc::{kde, silverman};
use super::spec::HilbertGaussianSpec;
use crate::error::{invalid, Result};
use crate::report::{EnvelopePoint, EnvelopeReport};

/// Lower constant of the sandwich.
pub const LOWER_FACTOR: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichOptions {
    pub rel_tol: f64,
    /// Use `|a_k|^2` instead of `|a_3|^2` in the `k >= 4` threshold.
    pub use_head_norm: bool,
    /// Draws for the Monte Carlo cross-check; 0 skips it.
    pub mc_samples: usize,
    /// Where to cross-check; defaults to the mean and mean + 2 sd.
    pub mc_points: Vec<f64>,
    pub bandwidth: Option<f64>,
    /// Tail method for the envelope check.
    pub tail_method: TailMethod,
    pub tail_samples: usize,
    /// Normalize the tail by `sigma_1^{-1} r^{-(k-3)/2}` instead of
    /// `sigma_1 r^{(k-3)/2}`; the other choice is always reported as extras.
    pub corrected_normalization: bool,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        SandwichOptions {
            rel_tol: 1e-11,
            use_head_norm: false,
            mc_samples: 0,
            mc_points: vec![],
            bandwidth: None,
            tail_method: TailMethod::Inversion,
            tail_samples: 1_000_000,
            corrected_normalization: false,
        }
    }
}

fn functional_extras(mut rep: EnvelopeReport, tf: &TailFunctionals) -> EnvelopeReport {
    rep = rep.with_extra("w", tf.w).with_extra("ln_w", tf.ln_w).with_extra("er", tf.er).with_extra("u0", tf.u0);
    rep = rep.with_extra("u_star", tf.u_star);
    if let (Some(a), Some(b)) = (tf.u_double_star, tf.u_double_star_ak) {
        rep = rep.with_extra("u_double_star", a).with_extra("u_double_star_ak", b);
    }
    rep
}

/// Statistic `p(u) / (f_k(u) W)` on `u_grid`. Every point is checked against
/// the upper constant 1; points at or above the threshold also against 1/8.
/// Slack is three times the combined numerical error.
pub fn verify_theorem15(spec: &HilbertGaussianSpec, u_grid: &[f64], opts: &SandwichOptions, seed: u64) -> Result<EnvelopeReport> {
    if spec.k < 3 {
        return invalid("the sandwich check needs k >= 3");
    }
    if u_grid.iter().any(|&u| !(u > 0.0)) {
        return invalid("grid points must be positive");
    }
    let tf = tilt_weight(spec, 1e-15)?;
    let cgf = Cgf::from_spec(spec)?;
    let threshold = tf.lower_threshold(spec.k, opts.use_head_norm).expect("k >= 3");
    let s1 = spec.s1();
    let lambda = spec.head_norm_sq();
    let points = u_grid
        .par_iter()
        .map(|&u| -> Result<EnvelopePoint> {
            let p = ln_density(&cgf, u, opts.rel_tol)?;
            let f = ln_noncentral_fk(u, spec.k, s1, lambda)?;
            let stat = (p.ln_value - f - tf.ln_w).exp();
            let tol = (3.0 * (p.rel_error + 1e-12) * stat).max(1e-9);
            let lower = (u >= threshold).then_some(LOWER_FACTOR);
            let mut pt = EnvelopePoint::checked_within(u, stat, lower, Some(1.0), tol);
            pt.pass &= p.converged;
            Ok(pt)
        })
        .collect::<Result<Vec<_>>>()?;
    let n_lower = points.iter().filter(|p| p.lower.is_some()).count();
    let mut rep = EnvelopeReport::new("theorem15", points);
    rep = functional_extras(rep, &tf)
        .with_extra("threshold", threshold)
        .with_extra("upper_lower_ratio", 1.0 / LOWER_FACTOR)
        .with_extra("lower_checked_points", n_lower as f64);
    if n_lower == 0 {
        rep = rep.with_note("no grid point reaches the lower-bound threshold; only the upper bound was checked");
    }
    if opts.mc_samples > 0 {
        let mean = cgf.mean();
        let sd = cgf.variance().sqrt();
        let pts = if opts.mc_points.is_empty() { vec![mean, mean + 2.0 * sd] } else { opts.mc_points.clone() };
        let h = opts.bandwidth.unwrap_or_else(|| silverman(&cgf, opts.mc_samples));
        let est = kde(&spec.spectrum(), &pts, h, opts.mc_samples, seed)?;
        let mut worst: f64 = 0.0;
        for (i, (&u, e)) in pts.iter().zip(&est).enumerate() {
            let target = smoothed_density(&cgf, u, h, opts.rel_tol)?;
            let z = (e.value - target) / e.std_error.max(1e-300);
            worst = worst.max(z.abs());
            rep = rep
                .with_extra(&format!("mc_u_{i}"), u)
                .with_extra(&format!("mc_kde_{i}"), e.value)
                .with_extra(&format!("mc_se_{i}"), e.std_error)
                .with_extra(&format!("mc_inversion_{i}"), target)
                .with_extra(&format!("mc_z_{i}"), z);
        }
        rep = rep.with_extra("mc_bandwidth", h).with_extra("mc_samples", opts.mc_samples as f64).with_extra("mc_max_abs_z", worst);
        if worst > 3.0 {
            rep.fail_overall();
            rep = rep.with_note("Monte Carlo kernel estimate disagrees with the smoothed inverted density by more than 3 SE");
        }
    }
    Ok(rep)
}

/// Radius above which the tail envelope is asserted.
pub fn theorem16_threshold(spec: &HilbertGaussianSpec, tf: &TailFunctionals, use_head_norm: bool) -> Option<f64> {
    let a = spec.head_norm_sq().sqrt();
    let u2 = tf.lower_threshold(spec.k, use_head_norm)?;
    (a > 0.0).then(|| spec.s1() / a + 2.0 * a + u2.sqrt())
}

/// `ln` of the normalized tail statistic given `ln P(|Y - a| > r)`, with
/// the factor `sigma_1 r^{(k-3)/2} |a_k|^{(k-1)/2}` as printed.
pub fn ln_theorem16_statistic(ln_tail: f64, r: f64, k: usize, s1: f64, a_norm: f64, ln_w: f64) -> f64 {
    let kf = k as f64;
    ln_tail + (r - a_norm).powi(2) / (2.0 * s1) + 0.5 * s1.ln() + (kf - 3.0) / 2.0 * r.ln() + (kf - 1.0) / 2.0 * a_norm.ln() - ln_w
}

/// Same with `sigma_1^{-1} r^{-(k-3)/2} |a_k|^{(k-1)/2}`, the normalization
/// under which the statistic tends to a constant as `r` grows.
pub fn ln_theorem16_corrected(ln_tail: f64, r: f64, k: usize, s1: f64, a_norm: f64, ln_w: f64) -> f64 {
    let kf = k as f64;
    ln_tail + (r - a_norm).powi(2) / (2.0 * s1) - 0.5 * s1.ln() - (kf - 3.0) / 2.0 * r.ln() + (kf - 1.0) / 2.0 * a_norm.ln() - ln_w
}

/// Normalized tail statistic on `r_grid`. Points below the admissibility
/// radius are reported as inconclusive; the envelope extrema are extras.
pub fn verify_theorem16(spec: &HilbertGaussianSpec, r_grid: &[f64], opts: &SandwichOptions, seed: u64) -> Result<EnvelopeReport> {
    if spec.k < 4 {
        return invalid("the tail envelope check needs k >= 4");
    }
    let a = spec.head_norm_sq().sqrt();
    if !(a > 0.0) {
        return invalid("the tail envelope check needs a nonzero head shift");
    }
    let tf = tilt_weight(spec, 1e-15)?;
    let cgf = Cgf::from_spec(spec)?;
    let r_min = theorem16_threshold(spec, &tf, opts.use_head_norm).expect("k >= 4 and a != 0");
    let s1 = spec.s1();
    let params = InversionParams { rel_tol: opts.rel_tol, n_samples: opts.tail_samples, bandwidth: None };
    let points = r_grid
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<(EnvelopePoint, f64)> {
            if !(r > 0.0) {
                return invalid("radii must be positive");
            }
            let ln_tail = match opts.tail_method {
                TailMethod::Inversion => ln_survival(&cgf, r * r, opts.rel_tol)?.ln_value,
                m => tail_prob(spec, r, m, &params, crate::seed::sub_seed(seed, &[i as u64]))?.ln_value,
            };
            let printed = ln_theorem16_statistic(ln_tail, r, spec.k, s1, a, tf.ln_w).exp();
            let corrected = ln_theorem16_corrected(ln_tail, r, spec.k, s1, a, tf.ln_w).exp();
            let (stat, other) = if opts.corrected_normalization { (corrected, printed) } else { (printed, corrected) };
            if r <= r_min {
                return Ok((EnvelopePoint::inconclusive(r, stat, None, None), other));
            }
            let mut pt = EnvelopePoint::checked(r, stat, None, None);
            pt.pass = stat.is_finite() && stat > 0.0;
            Ok((pt, other))
        })
        .collect::<Result<Vec<_>>>()?;
    let (points, others): (Vec<EnvelopePoint>, Vec<f64>) = points.into_iter().unzip();
    let admissible: Vec<f64> = points.iter().filter(|p| !p.inconclusive).map(|p| p.statistic).collect();
    let alt: Vec<f64> = points.iter().zip(&others).filter(|(p, _)| !p.inconclusive).map(|(_, o)| *o).collect();
    let n_excluded = points.len() - admissible.len();
    let mut rep = EnvelopeReport::new("theorem16", points);
    rep = functional_extras(rep, &tf).with_extra("r_threshold", r_min);
    if n_excluded > 0 {
        rep = rep.with_note(format!("{n_excluded} radii at or below the admissibility threshold were excluded"));
    }
    if admissible.is_empty() {
        rep.fail_overall();
        return Ok(rep.with_note("no admissible radius on the grid"));
    }
    let lo = admissible.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = admissible.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep = rep.with_extra("envelope_min", lo).with_extra("envelope_max", hi).with_extra("envelope_ratio", hi / lo);
    let alo = alt.iter().copied().fold(f64::INFINITY, f64::min);
    let ahi = alt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep = rep
        .with_extra("alt_envelope_min", alo)
        .with_extra("alt_envelope_max", ahi)
        .with_extra("alt_envelope_ratio", ahi / alo)
        .with_extra("corrected_normalization", if opts.corrected_normalization { 1.0 } else { 0.0 });
    if !(hi / lo).is_finite() {
        rep.fail_overall();
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k4_geometric(shift: Vec<f64>) -> HilbertGaussianSpec {
        HilbertGaussianSpec {
            k: 4,
            head_variance: 1.0,
            head_shift: shift,
            tail_variances: vec![0.25],
            tail_shift: vec![],
            geometric_ratio: Some(0.5),
            tail_shift_remainder: 0.0,
        }
    }

    #[test]
    fn empty_tail_statistic_is_one() {
        let spec = HilbertGaussianSpec::head_only(3, 1.5, vec![0.4, 0.1]);
        let grid: Vec<f64> = (1..=60).map(|i| 0.5 * i as f64).collect();
        let rep = verify_theorem15(&spec, &grid, &SandwichOptions::default(), 0).unwrap();
        assert!(rep.all_pass());
        for p in &rep.points {
            assert!((p.statistic - 1.0).abs() < 1e-8, "u={} stat={}", p.abscissa, p.statistic);
        }
    }

    #[test]
    fn geometric_tail_sandwich() {
        let spec = k4_geometric(vec![]);
        let tf = tilt_weight(&spec, 1e-15).unwrap();
        let t = tf.u_double_star.unwrap();
        assert!((t - 360.0).abs() < 1e-9);
        let grid: Vec<f64> = (0..=8).map(|i| t * (1.0 + 0.5 * i as f64)).chain([1.0, 5.0, 20.0]).collect();
        let rep = verify_theorem15(&spec, &grid, &SandwichOptions::default(), 0).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_csv());
        assert!(rep.summary.max <= 1.0);
        assert_eq!(rep.extras["lower_checked_points"], 9.0);
    }

    #[test]
    fn small_k_rejected() {
        assert!(verify_theorem15(&HilbertGaussianSpec::head_only(2, 1.0, vec![]), &[1.0], &SandwichOptions::default(), 0).is_err());
        assert!(verify_theorem16(&k4_geometric(vec![]), &[50.0], &SandwichOptions::default(), 0).is_err());
    }

    #[test]
    fn envelope_positive_and_excludes_small_radii() {
        let spec = k4_geometric(vec![1.0]);
        let tf = tilt_weight(&spec, 1e-15).unwrap();
        let r0 = theorem16_threshold(&spec, &tf, false).unwrap();
        let grid = [1.0, r0 * 1.01, r0 * 1.5, r0 * 2.0];
        let rep = verify_theorem16(&spec, &grid, &SandwichOptions::default(), 0).unwrap();
        assert!(rep.all_pass());
        assert!(rep.points[0].inconclusive);
        assert!(rep.points[1..].iter().all(|p| p.statistic > 0.0 && !p.inconclusive));
        assert!(rep.extras["envelope_ratio"].is_finite());
    }

    #[test]
    fn corrected_normalization_levels_off() {
        let spec = k4_geometric(vec![1.0]);
        let tf = tilt_weight(&spec, 1e-15).unwrap();
        let r0 = theorem16_threshold(&spec, &tf, false).unwrap();
        let grid: Vec<f64> = (1..=6).map(|i| r0 * (1.0 + 0.4 * i as f64)).collect();
        let opts = SandwichOptions { corrected_normalization: true, ..Default::default() };
        let rep = verify_theorem16(&spec, &grid, &opts, 0).unwrap();
        assert!(rep.extras["envelope_ratio"] < 1.1);
        // the printed factor grows like r^{k-3}
        let ratio = rep.extras["alt_envelope_ratio"];
        assert!((ratio / (grid[5] / grid[0]) - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn statistic_scales_by_weight() {
        let a = ln_theorem16_statistic(-100.0, 20.0, 4, 1.0, 1.0, 0.0);
        let b = ln_theorem16_statistic(-100.0, 20.0, 4, 1.0, 1.0, 0.3f64.ln_1p());
        assert!(((a - b).exp() - 1.3).abs() < 1e-12);
    }
}
