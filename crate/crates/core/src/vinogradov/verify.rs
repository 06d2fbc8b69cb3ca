//! Concentration functions and the bound checks built on `J_k` and `I_k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::count::{jk_count, CountMethod};
use super::ik::{ik_estimate, IkOptions, MeanValueEstimate};
use super::weyl::{exact_node_counts, unit_cell_moment, vinogradov_constants};
use crate::distribution::{atom_concentration, Distribution};
use crate::error::{invalid, Error, Result};
use crate::estimate::ols;
use crate::report::{EnvelopePoint, EnvelopeReport};
use crate::seed::{sample_vec, sub_seed};

/// Ratios may grow by at most this factor over the first grid value.
pub const RATIO_GROWTH_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrationMethod {
    Exact,
    Empirical,
}

/// `sup_a P(a < S <= a + 1)`.
///
/// The empirical method slides a unit window over `n` sorted draws.
pub fn concentration_sup(dist: &Distribution, method: ConcentrationMethod, n: usize, seed: u64) -> Result<f64> {
    dist.validate()?;
    match method {
        ConcentrationMethod::Exact => dist
            .unit_concentration()
            .or_else(|| dist.atoms().map(|a| atom_concentration(&a)))
            .ok_or_else(|| Error::InvalidArgument("law has no exact concentration function".into())),
        ConcentrationMethod::Empirical => {
            if n < 2 {
                return invalid("need at least two draws");
            }
            let mut x = sample_vec(n, seed, |r| dist.sample(r));
            x.sort_by(f64::total_cmp);
            let mut best = 0usize;
            let mut lo = 0usize;
            for hi in 0..x.len() {
                while x[lo] <= x[hi] - 1.0 {
                    lo += 1;
                }
                best = best.max(hi + 1 - lo);
            }
            Ok(best as f64 / n as f64)
        }
    }
}

fn concentration_for(dist: &Distribution, seed: u64) -> Result<f64> {
    concentration_sup(dist, ConcentrationMethod::Exact, 0, seed)
        .or_else(|_| concentration_sup(dist, ConcentrationMethod::Empirical, 1_000_000, seed))
}

/// Exact `J_k(P)` against `c_tau P^{2k - Delta}` for `k = m tau`, in log space.
pub fn verify_theorem7(p_grid: &[u64], m: u32, tau: u32) -> Result<EnvelopeReport> {
    let (delta, ln_c) = vinogradov_constants(m, tau)?;
    let k = m * tau;
    let counts: Vec<(u64, u128)> = p_grid
        .iter()
        .map(|&p| jk_count(p, m, k, CountMethod::SignatureHistogram).map(|c| (p, c.count)))
        .collect::<Result<_>>()?;
    let mut diagonal_ok = true;
    let points = counts
        .iter()
        .map(|&(p, j)| {
            diagonal_ok &= j >= (p as u128).pow(k);
            let lp = (p as f64).ln();
            let stat = (j as f64).ln() - (2.0 * k as f64 - delta) * lp - ln_c;
            EnvelopePoint::checked(p as f64, stat, None, Some(0.0))
        })
        .collect();
    let mut r = EnvelopeReport::new("theorem7", points).with_extra("delta", delta).with_extra("ln_c_tau", ln_c);
    let xs: Vec<f64> = counts.iter().map(|(p, _)| (*p as f64).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|(_, j)| (*j as f64).ln()).collect();
    if let Some(fit) = ols(&xs, &ys) {
        r = r.with_extra("slope", fit.slope).with_extra("slope_se", fit.slope_se);
    }
    if !diagonal_ok {
        r.fail_overall();
        r = r.with_note("diagonal lower bound J_k(P) >= P^k violated");
    }
    Ok(r)
}

/// Shared driver for the ratio-stability checks.
fn ratio_report(
    name: &str,
    family: &(dyn Fn(f64) -> Distribution + Sync),
    p_grid: &[f64],
    m: u32,
    k: u32,
    ln_scale: &(dyn Fn(f64) -> f64 + Sync),
    opts: &IkOptions,
) -> Result<EnvelopeReport> {
    if p_grid.is_empty() {
        return invalid("empty P grid");
    }
    let rows: Vec<(f64, MeanValueEstimate, f64)> = p_grid
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let dist = family(p);
            let o = IkOptions { seed: sub_seed(opts.seed, &[i as u64]), ..*opts };
            let est = ik_estimate(&dist, p, m, k, &o)?;
            let q = concentration_for(&dist, sub_seed(opts.seed, &[i as u64, 1]))?;
            Ok((p, est, q))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = rows
        .iter()
        .map(|(p, e, q)| e.value / (ln_scale(*p).exp() * q.powi(2 * k as i32)))
        .collect();
    let cap = ratios[0] * RATIO_GROWTH_LIMIT;
    let points = rows
        .iter()
        .zip(&ratios)
        .map(|((p, _, _), &ratio)| EnvelopePoint::checked(*p, ratio, Some(0.0), Some(cap)))
        .collect();
    let mut r = EnvelopeReport::new(name, points);
    let max_rel_se = rows.iter().map(|(_, e, _)| e.rel_se()).filter(|v| v.is_finite()).fold(0.0, f64::max);
    r = r.with_extra("max_rel_se", max_rel_se);
    for (p, e, _) in &rows {
        if let Some(flag) = &e.flag {
            r = r.with_note(format!("P={p}: {flag}"));
        }
    }
    Ok(r)
}

/// Empirical ratio `I_k / (P^{2k - Delta} Q^{2k})`, `k = m tau`, over a grid
/// of `P`, where `family(P)` gives the law of `S` at that `P`.
pub fn verify_theorem8(
    family: &(dyn Fn(f64) -> Distribution + Sync),
    p_grid: &[f64],
    m: u32,
    tau: u32,
    opts: &IkOptions,
) -> Result<EnvelopeReport> {
    let (delta, _) = vinogradov_constants(m, tau)?;
    let k = m * tau;
    let r = ratio_report("theorem8", family, p_grid, m, k, &|p| (2.0 * k as f64 - delta) * p.ln(), opts)?;
    Ok(r.with_extra("delta", delta))
}

/// Empirical ratio `I_k / (P^{(3k-1)/2} Q^{2k})` for `1 <= k <= m`.
pub fn verify_theorem10(
    family: &(dyn Fn(f64) -> Distribution + Sync),
    p_grid: &[f64],
    m: u32,
    k: u32,
    opts: &IkOptions,
) -> Result<EnvelopeReport> {
    if k < 1 || k > m {
        return invalid("need 1 <= k <= m");
    }
    ratio_report("theorem10", family, p_grid, m, k, &|p| (3.0 * k as f64 - 1.0) / 2.0 * p.ln(), opts)
}

/// `ln` of `2^{5m^2+m} P^{-m^2} / (1 - m/(2b))`.
pub fn theorem9_ln_bound(p: f64, m: u32, b: u32) -> f64 {
    let (mf, bf) = (m as f64, b as f64);
    (5.0 * mf * mf + mf) * 2f64.ln() - mf * mf * p.ln() - (1.0 - mf / (2.0 * bf)).ln()
}

/// `I_k(P)` for `S` uniform on `[-P, P]`, `k = bm`, against the explicit bound.
/// Passes when the estimate is below the bound by at least three standard
/// errors.
pub fn verify_theorem9(p: f64, m: u32, b: u32, opts: &IkOptions) -> Result<(EnvelopeReport, MeanValueEstimate)> {
    if !(p >= 32.0) {
        return invalid("the bound needs P >= 32");
    }
    if m < 2 || 2 * b < m + 1 {
        return invalid("need m >= 2 and b >= (m+1)/2");
    }
    let k = b * m;
    let est = ik_estimate(&Distribution::Uniform { lo: -p, hi: p }, p, m, k, opts)?;
    let bound = theorem9_ln_bound(p, m, b).exp();
    let mut point = EnvelopePoint::checked(p, est.value, Some(0.0), Some(bound));
    point.pass = est.value + 3.0 * est.std_error <= bound;
    let trivial = 2f64.powi(m as i32);
    let mut r = EnvelopeReport::new("theorem9", vec![point])
        .with_extra("bound", bound)
        .with_extra("trivial_bound", trivial)
        .with_extra("std_error", est.std_error)
        .with_extra("rel_se", est.rel_se())
        .with_extra("k", k as f64);
    if est.value > trivial + 3.0 * est.std_error {
        r.fail_overall();
        r = r.with_note("estimate exceeds the unit-modulus bound 2^m");
    }
    if let Some(f) = &est.flag {
        r = r.with_note(f.clone());
    }
    Ok((r, est))
}

/// `I_k(P)` for `S` uniform on `{1, ..., P}` by the exact unit-cell rule,
/// compared with `2^m P^{-2k} J_k(P)`.
pub fn remark3_check(p: u64, m: u32, k: u32) -> Result<EnvelopeReport> {
    if p < 1 || m < 2 || k < 1 {
        return invalid("need P >= 1, m >= 2, k >= 1");
    }
    let nodes = exact_node_counts(p, m, k);
    let total: f64 = nodes.iter().map(|&n| n as f64).product();
    if total > 1e9 {
        return Err(Error::Infeasible { what: "unit-cell rule".into(), estimate: total * p as f64 });
    }
    let j = jk_count(p, m, k, CountMethod::SignatureHistogram)?.count as f64;
    let two_m = 2f64.powi(m as i32);
    let p2k = (p as f64).powi(2 * k as i32);
    let ik = two_m * unit_cell_moment(p, m, k, &nodes)? / p2k;
    let refined_nodes: Vec<u64> = nodes.iter().map(|n| n + 1).collect();
    let ik_refined = two_m * unit_cell_moment(p, m, k, &refined_nodes)? / p2k;
    let target = two_m * j / p2k;
    let tol = 1e-6 * target;
    let point = EnvelopePoint::checked(p as f64, ik, Some(target - tol), Some(target + tol));
    let mut r = EnvelopeReport::new("remark3", vec![point])
        .with_extra("target", target)
        .with_extra("refined", ik_refined)
        .with_extra("j_k", j);
    if (ik - ik_refined).abs() > 1e-9 * target.max(f64::MIN_POSITIVE) {
        r.fail_overall();
        r = r.with_note("unit-cell rule not converged under node refinement");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_concentrations() {
        let c = |d: Distribution| concentration_sup(&d, ConcentrationMethod::Exact, 0, 0).unwrap();
        assert_eq!(c(Distribution::PointMass { at: 0.3 }), 1.0);
        assert!((c(Distribution::Uniform { lo: -5.0, hi: 5.0 }) - 0.1).abs() < 1e-15);
        assert!((c(Distribution::Lattice { lo: 1, hi: 7 }) - 1.0 / 7.0).abs() < 1e-15);
        assert!(concentration_sup(&Distribution::cantor(), ConcentrationMethod::Exact, 0, 0).is_err());
    }

    #[test]
    fn empirical_concentration_converges() {
        let n = 200_000;
        for d in [Distribution::standard_normal(), Distribution::Uniform { lo: -3.0, hi: 3.0 }, Distribution::unit_laplace()] {
            let exact = concentration_sup(&d, ConcentrationMethod::Exact, 0, 0).unwrap();
            let emp = concentration_sup(&d, ConcentrationMethod::Empirical, n, 9).unwrap();
            assert!((emp - exact).abs() < 2.0 / (n as f64).sqrt(), "{d:?}: {emp} vs {exact}");
        }
    }

    #[test]
    fn theorem7_small_grid() {
        let r = verify_theorem7(&[2, 3, 4, 5, 6, 8, 10], 3, 1).unwrap();
        assert!(r.all_pass());
        let slope = r.extras["slope"];
        assert!((3.0..=6.0).contains(&slope), "{slope}");
    }

    #[test]
    fn remark3_examples() {
        let r = remark3_check(2, 3, 1).unwrap();
        assert!((r.points[0].statistic - 4.0).abs() < 1e-9);
        let r = remark3_check(3, 3, 2).unwrap();
        assert!((r.points[0].statistic - 8.0 * 15.0 / 81.0).abs() < 1e-9);
        assert!(r.all_pass());
        for k in 1..=3 {
            let r = remark3_check(1, 3, k).unwrap();
            assert!((r.points[0].statistic - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn theorem9_bound_value() {
        // 2^48 32^-9 4 = 32
        assert!((theorem9_ln_bound(32.0, 3, 2).exp() - 32.0).abs() < 1e-9);
    }

    #[test]
    fn theorem8_point_mass_ratio_decays() {
        let opts = IkOptions { n_mc: 1000, ..IkOptions::default() };
        let r = verify_theorem8(&|_| Distribution::PointMass { at: 1.0 }, &[2.0, 4.0, 8.0], 3, 1, &opts).unwrap();
        assert!(r.all_pass());
        let s: Vec<f64> = r.points.iter().map(|p| p.statistic).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn theorem10_lattice_ratio_constant_for_k1() {
        let opts = IkOptions { n_mc: 1 << 14, ..IkOptions::default() };
        let r = verify_theorem10(&|p| Distribution::Lattice { lo: 1, hi: p as i64 }, &[2.0, 3.0, 5.0], 3, 1, &opts).unwrap();
        // I_1 = 2^m / P and Q = 1/P give the constant ratio 2^m
        for p in &r.points {
            assert!((p.statistic - 8.0).abs() < 0.5, "{p:?}");
        }
        assert!(verify_theorem10(&|_| Distribution::cantor(), &[2.0], 3, 4, &opts).is_err());
    }
}
