//! Monte Carlo experiments on the law of `Q(X_1, ..., X_n)`: the signed-root
//! counterexample family, two-sample comparisons and the stability scan.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::form::SymmetricQuadraticForm;
use super::moments::{moments_of, quad_moments};
use crate::distribution::Distribution;
use crate::error::{invalid, Result};
use crate::estimate::ComplexAccumulator;
use crate::report::{EnvelopePoint, EnvelopeReport};
use crate::seed::{chunked, stream_id, sub_seed};

/// Fewest draws accepted by the experiments.
pub const MIN_SAMPLES: usize = 100;
/// Asymptotic 99% quantile of the Kolmogorov distribution.
pub const KS_99: f64 = 1.6276;
/// Highest power compared in the moment discrepancy.
const MOMENT_ORDER: usize = 4;

/// `zeta (Z^2 + c)^{1/2}` with `Z ~ base`; base must be symmetric.
pub fn counterexample_sampler(base: &Distribution, c: f64) -> Result<Distribution> {
    if !(c > 0.0 && c.is_finite()) {
        return invalid("the counterexample constant must be positive");
    }
    base.validate()?;
    if !base.is_symmetric() {
        return invalid("the counterexample needs a symmetric base law");
    }
    Ok(Distribution::SignedRoot { base: Box::new(base.clone()), c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub critical_99: f64,
    pub reject_99: bool,
}

/// Two-sample Kolmogorov–Smirnov test at level 1%.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return invalid("KS test needs two non-empty samples");
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let critical_99 = KS_99 * ((nf + mf) / (nf * mf)).sqrt();
    Ok(KsTest { statistic: d, critical_99, reject_99: d > critical_99 })
}

/// Draws of `Q(X)` and of the first coordinate `X_1`.
struct FormSample {
    q: Vec<f64>,
    marginal: Vec<f64>,
}

fn sample_form(q: &SymmetricQuadraticForm, dist: &Distribution, n_samples: usize, seed: u64) -> FormSample {
    let n = q.n();
    let parts = chunked(n_samples, seed, |r, len| {
        let mut x = vec![0.0; n];
        let mut qs = Vec::with_capacity(len);
        let mut ms = Vec::with_capacity(len);
        for _ in 0..len {
            for v in x.iter_mut() {
                *v = dist.sample(r);
            }
            qs.push(q.eval(&x));
            ms.push(x[0]);
        }
        (qs, ms)
    });
    let mut out = FormSample { q: Vec::with_capacity(n_samples), marginal: Vec::with_capacity(n_samples) };
    for (qs, ms) in parts {
        out.q.extend(qs);
        out.marginal.extend(ms);
    }
    out
}

/// Per-law stream so that swapping the laws swaps the samples.
fn law_seed(seed: u64, dist: &Distribution) -> u64 {
    sub_seed(seed, &[stream_id(&format!("{dist:?}"))])
}

fn ecf(xs: &[f64], t: f64) -> ComplexAccumulator {
    let mut acc = ComplexAccumulator::default();
    for &x in xs {
        acc.push(Complex64::from_polar(1.0, t * x));
    }
    acc
}

/// `|phi_1(t) - phi_2(t)|` and its standard error.
fn cf_gap(a: &[f64], b: &[f64], t: f64) -> (f64, f64) {
    let ea = ecf(a, t).finish();
    let eb = ecf(b, t).finish();
    ((ea.value - eb.value).norm(), ea.std_error.hypot(eb.std_error))
}

fn check_inputs(d1: &Distribution, d2: &Distribution, n_samples: usize) -> Result<()> {
    d1.validate()?;
    d2.validate()?;
    if !d1.is_symmetric() || !d2.is_symmetric() {
        return invalid("characterization experiments need symmetric laws");
    }
    if n_samples < MIN_SAMPLES {
        return invalid(format!("need at least {MIN_SAMPLES} samples"));
    }
    Ok(())
}

/// CF gap and its standard error at one `t`.
type Gap = (f64, f64);

/// Compares the laws of `Q(X)` under two input laws on a `t` grid.
///
/// A point passes when the CF gap is within 3 standard errors. The report
/// fails overall when the CF grid or the two-sample KS test on `Q` rejects
/// equality. Marginal comparisons and, when both laws have closed-form
/// moments, the largest relative gap in `E Q^j`, `j <= 4`, are extras.
pub fn cp_distance(q: &SymmetricQuadraticForm, d1: &Distribution, d2: &Distribution, t_grid: &[f64], n_samples: usize, seed: u64) -> Result<EnvelopeReport> {
    check_inputs(d1, d2, n_samples)?;
    let s1 = sample_form(q, d1, n_samples, law_seed(seed, d1));
    let s2 = sample_form(q, d2, n_samples, law_seed(seed, d2));
    let gaps: Vec<(Gap, Gap)> =
        t_grid.par_iter().map(|&t| (cf_gap(&s1.q, &s2.q, t), cf_gap(&s1.marginal, &s2.marginal, t))).collect();
    let points: Vec<EnvelopePoint> = t_grid
        .iter()
        .zip(&gaps)
        .map(|(&t, &((g, se), _))| EnvelopePoint::checked(t, g, None, Some(3.0 * se)))
        .collect();
    let max_z = |sel: fn(&(Gap, Gap)) -> Gap| {
        gaps.iter().map(sel).map(|(g, se)| if se > 0.0 { g / se } else if g > 0.0 { f64::INFINITY } else { 0.0 }).fold(0.0, f64::max)
    };
    let q_ks = ks_two_sample(&s1.q, &s2.q)?;
    let m_ks = ks_two_sample(&s1.marginal, &s2.marginal)?;
    let mut rep = EnvelopeReport::new("cp_distance", points)
        .with_extra("q_cf_max_z", max_z(|g| g.0))
        .with_extra("marginal_cf_max_z", max_z(|g| g.1))
        .with_extra("q_ks", q_ks.statistic)
        .with_extra("marginal_ks", m_ks.statistic)
        .with_extra("ks_critical_99", q_ks.critical_99)
        .with_extra("marginal_ks_reject_99", if m_ks.reject_99 { 1.0 } else { 0.0 });
    if let (Ok(m1), Ok(m2)) = (moments_of(d1, 2 * MOMENT_ORDER), moments_of(d2, 2 * MOMENT_ORDER)) {
        let q1 = quad_moments(q, &m1, MOMENT_ORDER)?;
        let q2 = quad_moments(q, &m2, MOMENT_ORDER)?;
        let gap = (1..=MOMENT_ORDER)
            .map(|j| {
                let (a, b) = (q1.get(j).expect("order"), q2.get(j).expect("order"));
                (a - b).abs() / a.abs().max(b.abs()).max(1.0)
            })
            .fold(0.0, f64::max);
        rep = rep.with_extra("moment_discrepancy", gap);
    }
    if q_ks.reject_99 {
        rep.fail_overall();
        rep = rep.with_note("two-sample KS rejects equality of the laws of Q at 99%");
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMetric {
    Ks,
    CfSup,
}

fn distance(metric: StabilityMetric, a: &[f64], b: &[f64], t_grid: &[f64]) -> Result<f64> {
    match metric {
        StabilityMetric::Ks => Ok(ks_two_sample(a, b)?.statistic),
        StabilityMetric::CfSup => Ok(t_grid.iter().map(|&t| cf_gap(a, b, t).0).fold(0.0, f64::max)),
    }
}

/// Distances `d(Q under family(N), Q under target)` and
/// `d(family(N), target)` over `n_grid`.
///
/// The family is sampled from one stream for every `N` (common random
/// numbers), so that scale families move smoothly with `N`. The report fails
/// when the two sequences move in opposite directions by more than the noise
/// floor between consecutive grid points.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    q: &SymmetricQuadraticForm,
    family: &(dyn Fn(u32) -> Distribution + Sync),
    target: &Distribution,
    n_grid: &[u32],
    metric: StabilityMetric,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<EnvelopeReport> {
    if n_grid.is_empty() {
        return invalid("empty N grid");
    }
    if metric == StabilityMetric::CfSup && t_grid.is_empty() {
        return invalid("the CF metric needs a t grid");
    }
    check_inputs(target, target, n_samples)?;
    let base = sample_form(q, target, n_samples, sub_seed(seed, &[0]));
    let rows = n_grid
        .par_iter()
        .map(|&n| -> Result<(f64, f64)> {
            let law = family(n);
            check_inputs(&law, target, n_samples)?;
            let s = sample_form(q, &law, n_samples, sub_seed(seed, &[1]));
            Ok((distance(metric, &s.q, &base.q, t_grid)?, distance(metric, &s.marginal, &base.marginal, t_grid)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let nf = n_samples as f64;
    let floor = match metric {
        StabilityMetric::Ks => KS_99 * (2.0 / nf).sqrt(),
        StabilityMetric::CfSup => 3.0 * (2.0 / nf).sqrt(),
    };
    let points: Vec<EnvelopePoint> = n_grid.iter().zip(&rows).map(|(&n, &(dq, _))| EnvelopePoint::checked(n as f64, dq, None, None)).collect();
    let mut comonotone = true;
    for w in rows.windows(2) {
        let (dq, dm) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        if (dq > floor && dm < -floor) || (dq < -floor && dm > floor) {
            comonotone = false;
        }
    }
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let mut rep = EnvelopeReport::new("stability", points)
        .with_extra("noise_floor", floor)
        .with_extra("comonotone", if comonotone { 1.0 } else { 0.0 })
        .with_extra("q_distance_drop", first.0 - last.0)
        .with_extra("marginal_distance_drop", first.1 - last.1);
    for (&n, &(_, dm)) in n_grid.iter().zip(&rows) {
        rep = rep.with_extra(&format!("marginal_distance_{n:05}"), dm);
    }
    if !comonotone {
        rep.fail_overall();
        rep = rep.with_note("form distance and marginal distance move in opposite directions beyond the noise floor");
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{rng, sample_vec};

    fn t_grid() -> Vec<f64> {
        (1..=12).map(|i| 0.25 * i as f64).collect()
    }

    #[test]
    fn counterexample_identities_hold_pathwise() {
        let base = Distribution::standard_normal();
        let c = 1.0;
        let x = counterexample_sampler(&base, c).unwrap();
        let mut r = rng(4);
        let mut r2 = rng(4);
        for _ in 0..10_000 {
            let z1 = base.sample(&mut r);
            let s1: bool = rand::Rng::random(&mut r);
            let z2 = base.sample(&mut r);
            let s2: bool = rand::Rng::random(&mut r);
            let x1 = x.sample(&mut r2);
            let x2 = x.sample(&mut r2);
            let (e1, e2) = (crate::distribution::signed_root(z1, c, s1), crate::distribution::signed_root(z2, c, s2));
            assert_eq!((x1, x2), (e1, e2));
            assert!((x1 * x1 - z1 * z1 - c).abs() < 1e-12 * (1.0 + z1 * z1));
            let lhs = x1 * x1 - x2 * x2;
            let rhs = z1 * z1 - z2 * z2;
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + z1 * z1 + z2 * z2));
        }
        assert!(counterexample_sampler(&base, 0.0).is_err());
        assert!(counterexample_sampler(&Distribution::Normal { mean: 1.0, sd: 1.0 }, 1.0).is_err());
    }

    #[test]
    fn ks_oracle() {
        // hand-computed: samples {1,2,3} and {2.5}; gaps 1/3, 2/3, 1/3 -> 2/3
        let k = ks_two_sample(&[1.0, 2.0, 3.0], &[2.5]).unwrap();
        assert!((k.statistic - 2.0 / 3.0).abs() < 1e-15);
        let k = ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(k.statistic, 0.0);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn marginal_ks_rejects_counterexample() {
        let base = Distribution::standard_normal();
        let x = counterexample_sampler(&base, 1.0).unwrap();
        let a = sample_vec(100_000, 1, |r| base.sample(r));
        let b = sample_vec(100_000, 2, |r| x.sample(r));
        assert!(ks_two_sample(&a, &b).unwrap().reject_99);
    }

    #[test]
    fn identical_laws_give_zero_gap() {
        let q = SymmetricQuadraticForm::example3();
        let d = Distribution::standard_normal();
        let rep = cp_distance(&q, &d, &d, &t_grid(), 5_000, 3).unwrap();
        assert!(rep.all_pass());
        assert!(rep.points.iter().all(|p| p.statistic == 0.0));
    }

    #[test]
    fn symmetric_in_arguments() {
        let q = SymmetricQuadraticForm::example3();
        let (a, b) = (Distribution::standard_normal(), Distribution::unit_laplace());
        let r1 = cp_distance(&q, &a, &b, &t_grid(), 5_000, 8).unwrap();
        let r2 = cp_distance(&q, &b, &a, &t_grid(), 5_000, 8).unwrap();
        for (p, s) in r1.points.iter().zip(&r2.points) {
            assert!((p.statistic - s.statistic).abs() < 1e-15);
        }
    }

    #[test]
    fn counterexample_law_of_q_matches() {
        let q = SymmetricQuadraticForm::difference_of_squares();
        let z = Distribution::standard_normal();
        let x = counterexample_sampler(&z, 1.0).unwrap();
        let rep = cp_distance(&q, &z, &x, &t_grid(), 50_000, 12).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_csv());
        assert!(rep.extras["marginal_cf_max_z"] > 3.0);
        assert_eq!(rep.extras["marginal_ks_reject_99"], 1.0);
        assert!(rep.extras["moment_discrepancy"] < 1e-12);
    }

    #[test]
    fn case1_form_separates_normal_from_laplace() {
        let q = SymmetricQuadraticForm::example3();
        let rep = cp_distance(&q, &Distribution::standard_normal(), &Distribution::unit_laplace(), &t_grid(), 100_000, 5).unwrap();
        assert!(rep.extras["q_cf_max_z"] > 3.0);
        assert!(rep.extras["moment_discrepancy"] > 0.1);
    }

    #[test]
    fn stability_on_normal_family() {
        let q = SymmetricQuadraticForm::example3();
        let fam = |n: u32| Distribution::Normal { mean: 0.0, sd: (1.0 + 1.0 / n as f64).sqrt() };
        let grid = [1, 2, 4, 8, 16, 32, 64];
        let rep = stability_experiment(&q, &fam, &Distribution::standard_normal(), &grid, StabilityMetric::Ks, &[], 50_000, 2).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_csv());
        assert!(rep.extras["q_distance_drop"] > 0.0 && rep.extras["marginal_distance_drop"] > 0.0);
    }

    #[test]
    fn stability_identical_family_at_floor() {
        let q = SymmetricQuadraticForm::example3();
        let fam = |_: u32| Distribution::standard_normal();
        let rep = stability_experiment(&q, &fam, &Distribution::standard_normal(), &[1, 2, 4], StabilityMetric::CfSup, &t_grid(), 20_000, 2)
            .unwrap();
        let floor = rep.extras["noise_floor"];
        assert!(rep.points.iter().all(|p| p.statistic < floor));
    }
}
