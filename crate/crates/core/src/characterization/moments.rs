//! Moment sequences, moments of quadratic forms, and the Carleman diagnostic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::form::SymmetricQuadraticForm;
use crate::distribution::Distribution;
use crate::error::{invalid, Error, Result};
use crate::estimate::{ols, LineFit};
use crate::quad::integrate_pieces;

/// `alpha_1, alpha_2, ...`; `alpha_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub moments: Vec<f64>,
    /// Odd moments vanish.
    pub symmetric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HankelCheck {
    /// Size of the largest Hankel matrix `(alpha_{i+j})_{i,j<m}` examined.
    pub window: usize,
    /// Smallest pivot of the diagonally scaled Cholesky factorization.
    pub min_pivot: f64,
    pub positive: bool,
}

impl MomentSequence {
    pub fn new(moments: Vec<f64>, symmetric: bool) -> Result<Self> {
        if moments.iter().any(|m| m.is_nan()) {
            return invalid("moments must not be NaN");
        }
        if moments.iter().skip(1).step_by(2).any(|&m| m < 0.0) {
            return invalid("even moments must be nonnegative");
        }
        if symmetric && moments.iter().step_by(2).any(|&m| m != 0.0) {
            return invalid("a symmetric sequence has vanishing odd moments");
        }
        Ok(MomentSequence { moments, symmetric })
    }

    /// Symmetric sequence from `alpha_2, alpha_4, ...`.
    pub fn from_even(even: &[f64]) -> Result<Self> {
        Self::new(even.iter().flat_map(|&e| [0.0, e]).collect(), true)
    }

    /// `alpha_{2n} = (2n - 1)!!`.
    pub fn standard_normal(order: usize) -> Self {
        moments_of(&Distribution::standard_normal(), order).expect("normal moments")
    }

    /// Highest available order.
    pub fn order(&self) -> usize {
        self.moments.len()
    }

    /// `alpha_k`, with `alpha_0 = 1`.
    pub fn get(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(1.0)
        } else {
            self.moments.get(k - 1).copied()
        }
    }

    /// Positive semidefiniteness of the largest Hankel matrix the sequence fills.
    pub fn hankel_check(&self) -> HankelCheck {
        let m = self.order() / 2 + 1;
        let h = |i: usize, j: usize| self.get(i + j).expect("within order");
        let d: Vec<f64> = (0..m).map(|i| h(i, i).sqrt()).collect();
        let mut l = vec![vec![0.0; m]; m];
        let mut min_pivot = f64::INFINITY;
        for i in 0..m {
            for j in 0..=i {
                let scaled = if d[i] > 0.0 && d[j] > 0.0 { h(i, j) / (d[i] * d[j]) } else { 0.0 };
                let s = scaled - (0..j).map(|p| l[i][p] * l[j][p]).sum::<f64>();
                if i == j {
                    min_pivot = min_pivot.min(s);
                    l[i][i] = s.max(0.0).sqrt();
                } else {
                    l[i][j] = if l[j][j] > 0.0 { s / l[j][j] } else { 0.0 };
                }
            }
        }
        HankelCheck { window: m, min_pivot, positive: min_pivot >= -1e-9 }
    }
}

fn double_factorial_odd(n: usize) -> f64 {
    // (2n - 1)!!
    (1..=n).fold(1.0, |acc, i| acc * (2 * i - 1) as f64)
}

/// Moments `alpha_1..alpha_order` of a law, where available in closed form.
pub fn moments_of(dist: &Distribution, order: usize) -> Result<MomentSequence> {
    use Distribution::*;
    dist.validate()?;
    let raw: Vec<f64> = match dist {
        PointMass { at } => (1..=order).map(|k| at.powi(k as i32)).collect(),
        Normal { mean, sd } => {
            let mut m = vec![1.0, *mean];
            for k in 2..=order {
                m.push(mean * m[k - 1] + (k - 1) as f64 * sd * sd * m[k - 2]);
            }
            m[1..=order].to_vec()
        }
        Uniform { lo, hi } => (1..=order)
            .map(|k| {
                let p = k as i32 + 1;
                (hi.powi(p) - lo.powi(p)) / ((k + 1) as f64 * (hi - lo))
            })
            .collect(),
        Lattice { .. } | Discrete { .. } => {
            let atoms = dist.atoms().ok_or_else(|| Error::InvalidArgument("too many atoms".into()))?;
            (1..=order).map(|k| atoms.iter().map(|(x, p)| p * x.powi(k as i32)).sum()).collect()
        }
        Laplace { scale } => (1..=order)
            .map(|k| if k % 2 == 1 { 0.0 } else { (ln_gamma(k as f64 + 1.0) + k as f64 * scale.ln()).exp() })
            .collect(),
        StretchedExp => (1..=order).map(|k| if k % 2 == 1 { 0.0 } else { ln_gamma(2.0 * k as f64 + 2.0).exp() }).collect(),
        SignedRoot { base, c } => {
            let b = moments_of(base, order)?;
            (1..=order)
                .map(|k| {
                    if k % 2 == 1 {
                        return 0.0;
                    }
                    // E (Z^2 + c)^j = sum_i C(j, i) c^{j-i} E Z^{2i}
                    let j = k / 2;
                    let mut binom = 1.0;
                    let mut s = 0.0;
                    for i in 0..=j {
                        s += binom * c.powi((j - i) as i32) * b.get(2 * i).expect("order");
                        binom = binom * (j - i) as f64 / (i + 1) as f64;
                    }
                    s
                })
                .collect()
        }
        CantorPower { .. } => return invalid("moments of the Cantor-power law are not implemented"),
    };
    let symmetric = dist.is_symmetric();
    let raw = if symmetric { raw.iter().enumerate().map(|(i, &m)| if i % 2 == 0 { 0.0 } else { m }).collect() } else { raw };
    MomentSequence::new(raw, symmetric)
}

/// Standard normal even moments `(2n - 1)!!`, `n = 1..=count`.
pub fn normal_even_moments(count: usize) -> Vec<f64> {
    (1..=count).map(double_factorial_odd).collect()
}

type Monomial = Vec<u16>;

/// `E Q^j`, `j = 1..=order`, for i.i.d. inputs with the given moments, by
/// expanding `Q^j` over exponent vectors and using independence.
pub fn quad_moments(q: &SymmetricQuadraticForm, z: &MomentSequence, order: usize) -> Result<MomentSequence> {
    let required = 2 * order;
    if z.order() < required {
        return Err(Error::InsufficientMoments { required, available: z.order() });
    }
    let n = q.n();
    let a = q.matrix();
    let mut base: BTreeMap<Monomial, f64> = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            let c = if i == j { a[i][i] } else { 2.0 * a[i][j] };
            if c != 0.0 {
                let mut e = vec![0u16; n];
                e[i] += 1;
                e[j] += 1;
                *base.entry(e).or_insert(0.0) += c;
            }
        }
    }
    let expect = |poly: &BTreeMap<Monomial, f64>| -> f64 {
        poly.iter()
            .map(|(e, c)| {
                let mut v = *c;
                for &p in e {
                    if z.symmetric && p % 2 == 1 {
                        return 0.0;
                    }
                    v *= z.get(p as usize).expect("order checked");
                }
                v
            })
            .sum()
    };
    let mut power = base.clone();
    let mut out = vec![expect(&power)];
    for _ in 1..order {
        let mut next: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (e1, c1) in &power {
            for (e2, c2) in &base {
                let e: Monomial = e1.iter().zip(e2).map(|(x, y)| x + y).collect();
                *next.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        next.retain(|_, c| *c != 0.0);
        power = next;
        out.push(expect(&power));
    }
    let symmetric = out.iter().step_by(2).all(|&m| m == 0.0);
    MomentSequence::new(out, symmetric)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CarlemanTrend {
    /// Terms decay no faster than `1/n`.
    LooksDivergent,
    /// Terms decay like `n^{-b}` with `b` clearly above 1.
    LooksConvergent,
    Undecided,
}

/// Partial sums of `sum_n alpha_{2n}^{-1/(2n)}` with a power-law fit of the
/// terms. Finitely many terms cannot prove divergence; this is evidence only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlemanDiagnostic {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Fit of `ln term` against `ln n` over the upper half of the terms.
    pub fit: Option<LineFit>,
    pub trend: CarlemanTrend,
}

/// Slack around the critical decay exponent `-1`.
const TREND_MARGIN: f64 = 0.1;

/// Diagnostic from `ln alpha_{2n}`, `n = 1, 2, ...`; `-inf` marks a zero moment.
pub fn carleman_from_log_moments(ln_even: &[f64]) -> CarlemanDiagnostic {
    let terms: Vec<f64> = ln_even.iter().enumerate().map(|(i, &l)| (-l / (2.0 * (i + 1) as f64)).exp()).collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |s, &t| {
            *s += t;
            Some(*s)
        })
        .collect();
    if terms.iter().any(|t| t.is_infinite()) {
        return CarlemanDiagnostic { terms, partial_sums, fit: None, trend: CarlemanTrend::LooksDivergent };
    }
    let half = terms.len() / 2;
    let xs: Vec<f64> = (half..terms.len()).map(|i| ((i + 1) as f64).ln()).collect();
    let ys: Vec<f64> = terms[half..].iter().map(|t| t.ln()).collect();
    let fit = ols(&xs, &ys);
    let trend = match fit {
        Some(f) if f.slope >= -1.0 + TREND_MARGIN => CarlemanTrend::LooksDivergent,
        Some(f) if f.slope <= -1.0 - TREND_MARGIN => CarlemanTrend::LooksConvergent,
        _ => CarlemanTrend::Undecided,
    };
    CarlemanDiagnostic { terms, partial_sums, fit, trend }
}

pub fn carleman_diagnostic(m: &MomentSequence) -> CarlemanDiagnostic {
    let ln_even: Vec<f64> = (1..=m.order() / 2).map(|n| m.get(2 * n).expect("order").ln()).collect();
    carleman_from_log_moments(&ln_even)
}

/// `ln alpha_{2n}` of the density `exp(-|x|^{1/2}) / 4` by quadrature of
/// `int_0^inf y^{4n+1} e^{-y} dy` scaled by its peak value.
pub fn stretched_exp_log_moment(n: usize) -> f64 {
    let p = (4 * n + 1) as f64;
    let mode = p;
    let ln_peak = p * mode.ln() - mode;
    let f = |y: f64| if y <= 0.0 { 0.0 } else { (p * y.ln() - y - ln_peak).exp() };
    let sd = p.sqrt().max(1.0);
    let breaks: Vec<f64> = [0.0, (mode - 8.0 * sd).max(0.0), mode, mode + 8.0 * sd, mode + 40.0 * sd + 200.0]
        .into_iter()
        .fold(Vec::new(), |mut v, b| {
            if v.last().is_none_or(|&l| b > l) {
                v.push(b);
            }
            v
        });
    let r = integrate_pieces(f, &breaks, 0.0, 1e-13, 500);
    ln_peak + r.value.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example3_second_moment_is_two() {
        let q = SymmetricQuadraticForm::example3();
        let m = quad_moments(&q, &MomentSequence::standard_normal(8), 4).unwrap();
        assert_eq!(m.get(1), Some(0.0));
        assert_eq!(m.get(2), Some(2.0));
        assert!(m.symmetric);
    }

    #[test]
    fn mean_is_trace_times_second_moment() {
        let q = SymmetricQuadraticForm::new(vec![vec![1.5, 0.3], vec![0.3, -0.25]]).unwrap();
        let z = moments_of(&Distribution::Uniform { lo: -1.0, hi: 1.0 }, 4).unwrap();
        let m = quad_moments(&q, &z, 2).unwrap();
        assert!((m.get(1).unwrap() - 1.25 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn difference_of_squares_is_symmetric() {
        let m = quad_moments(&SymmetricQuadraticForm::difference_of_squares(), &MomentSequence::standard_normal(12), 6).unwrap();
        assert!(m.symmetric);
        // E (Z1^2 - Z2^2)^2 = 2 (3 - 1)
        assert_eq!(m.get(2), Some(4.0));
    }

    #[test]
    fn insufficient_moments_reported() {
        match quad_moments(&SymmetricQuadraticForm::example3(), &MomentSequence::standard_normal(5), 3) {
            Err(Error::InsufficientMoments { required: 6, available: 5 }) => {}
            other => panic!("{other:?}"),
        }
    }

    /// Oracle: expand `E (x^T A x)^2` by hand for general symmetric `A`:
    /// `sum_i a_ii^2 m4 + sum_{i != j} (a_ii a_jj + 2 a_ij^2) m2^2`.
    #[test]
    fn second_moment_matches_hand_expansion() {
        let a = vec![vec![0.7, -0.2, 0.4], vec![-0.2, -1.1, 0.9], vec![0.4, 0.9, 0.3]];
        let q = SymmetricQuadraticForm::new(a.clone()).unwrap();
        for d in [Distribution::standard_normal(), Distribution::Uniform { lo: -2.0, hi: 2.0 }, Distribution::unit_laplace()] {
            let z = moments_of(&d, 4).unwrap();
            let (m2, m4) = (z.get(2).unwrap(), z.get(4).unwrap());
            let mut want = 0.0;
            for i in 0..3 {
                want += a[i][i] * a[i][i] * m4;
                for j in 0..3 {
                    if i != j {
                        want += (a[i][i] * a[j][j] + 2.0 * a[i][j] * a[i][j]) * m2 * m2;
                    }
                }
            }
            let got = quad_moments(&q, &z, 2).unwrap().get(2).unwrap();
            assert!((got - want).abs() < 1e-12 * want.abs(), "{d:?}: {got} vs {want}");
        }
    }

    #[test]
    fn law_moments() {
        let n = moments_of(&Distribution::Normal { mean: 1.0, sd: 2.0 }, 4).unwrap();
        assert_eq!(n.moments, vec![1.0, 5.0, 13.0, 73.0]);
        let l = moments_of(&Distribution::Laplace { scale: 1.0 }, 4).unwrap();
        assert!((l.get(4).unwrap() - 24.0).abs() < 1e-9);
        let s = moments_of(&Distribution::SignedRoot { base: Box::new(Distribution::standard_normal()), c: 1.0 }, 4).unwrap();
        assert_eq!(s.get(2), Some(2.0));
        assert_eq!(s.get(4), Some(3.0 + 2.0 + 1.0));
        let e = moments_of(&Distribution::StretchedExp, 4).unwrap();
        assert!((e.get(2).unwrap() - 120.0).abs() < 1e-9);
        let lat = moments_of(&Distribution::Lattice { lo: -1, hi: 1 }, 2).unwrap();
        assert!((lat.get(2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(moments_of(&Distribution::cantor(), 2).is_err());
    }

    #[test]
    fn hankel_positivity() {
        assert!(MomentSequence::standard_normal(20).hankel_check().positive);
        // alpha_2 = 1, alpha_4 = 0.5 violates alpha_4 >= alpha_2^2
        let bad = MomentSequence::from_even(&[1.0, 0.5]).unwrap();
        assert!(!bad.hankel_check().positive);
        assert!(MomentSequence::new(vec![0.0, -1.0], true).is_err());
    }

    #[test]
    fn carleman_normal_diverges() {
        let d = carleman_diagnostic(&MomentSequence::standard_normal(100));
        assert_eq!(d.trend, CarlemanTrend::LooksDivergent);
        assert!((d.fit.unwrap().slope + 0.5).abs() < 0.05);
        assert!(d.partial_sums.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn carleman_point_mass() {
        let m = MomentSequence::from_even(&[0.0; 5]).unwrap();
        assert_eq!(carleman_diagnostic(&m).trend, CarlemanTrend::LooksDivergent);
    }

    #[test]
    fn stretched_exp_moments_by_quadrature() {
        for n in 1..=50 {
            let q = stretched_exp_log_moment(n);
            let exact = ln_gamma((4 * n + 2) as f64);
            assert!((q - exact).abs() < 1e-10 * exact.max(1.0), "n={n}");
        }
        let ln_even: Vec<f64> = (1..=50).map(stretched_exp_log_moment).collect();
        let d = carleman_from_log_moments(&ln_even);
        assert_eq!(d.trend, CarlemanTrend::LooksConvergent);
    }
}
