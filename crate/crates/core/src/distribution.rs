//! Sampleable one-dimensional laws with optional exact structure.
//!
//! Multidimensional inputs are always independent products of one of these
//! laws.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::charfun::cantor::cantor_cf;
use crate::error::{invalid, Result};
use crate::seed::Rng;

/// Ternary digits kept when sampling Cantor-type laws; 3^-36 is below f64
/// resolution relative to the leading digit.
const CANTOR_DIGITS: i32 = 36;

/// Atom count above which discrete laws are not expanded exactly.
pub const MAX_EXACT_ATOMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Distribution {
    PointMass { at: f64 },
    Normal { mean: f64, sd: f64 },
    /// Continuous uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform on the integers `lo..=hi`.
    Lattice { lo: i64, hi: i64 },
    Discrete { atoms: Vec<f64>, weights: Vec<f64> },
    /// Symmetrized exponential with density `exp(-|x|/scale) / (2 scale)`.
    Laplace { scale: f64 },
    /// Law with characteristic function `L(t)^power`, where
    /// `L(t) = prod_j cos(2 pi 3^-j t)` is the symmetric Cantor law.
    CantorPower { power: u32 },
    /// Density `exp(-|x|^{1/2}) / 4`.
    StretchedExp,
    /// `zeta * (Z^2 + c)^{1/2}` with `Z ~ base` and an independent fair sign.
    SignedRoot { base: Box<Distribution>, c: f64 },
}

impl Distribution {
    pub fn standard_normal() -> Self {
        Distribution::Normal { mean: 0.0, sd: 1.0 }
    }

    /// Laplace law with unit variance.
    pub fn unit_laplace() -> Self {
        Distribution::Laplace { scale: std::f64::consts::FRAC_1_SQRT_2 }
    }

    pub fn cantor() -> Self {
        Distribution::CantorPower { power: 1 }
    }

    /// Checks parameters; samplers assume a validated law.
    pub fn validate(&self) -> Result<()> {
        use Distribution::*;
        match self {
            PointMass { at } if !at.is_finite() => invalid("point mass location must be finite"),
            Normal { mean, sd } if !mean.is_finite() || !(sd.is_finite() && *sd >= 0.0) => {
                invalid("normal needs finite mean and sd >= 0")
            }
            Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => invalid("uniform needs lo < hi"),
            Lattice { lo, hi } if lo > hi => invalid("lattice needs lo <= hi"),
            Discrete { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return invalid("discrete law needs matching, non-empty atoms and weights");
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || atoms.iter().any(|a| !a.is_finite()) {
                    return invalid("discrete law has invalid atoms or weights");
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return invalid(format!("discrete weights sum to {total}, expected 1"));
                }
                Ok(())
            }
            Laplace { scale } if !(scale.is_finite() && *scale > 0.0) => invalid("laplace scale must be positive"),
            CantorPower { power } if *power == 0 => invalid("cantor power must be at least 1"),
            SignedRoot { base, c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return invalid("c must be positive");
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, r: &mut Rng) -> f64 {
        use Distribution::*;
        match self {
            PointMass { at } => *at,
            Normal { mean, sd } => {
                let z: f64 = r.sample(StandardNormal);
                mean + sd * z
            }
            Uniform { lo, hi } => lo + (hi - lo) * r.random::<f64>(),
            Lattice { lo, hi } => r.random_range(*lo..=*hi) as f64,
            Discrete { atoms, weights } => {
                let u: f64 = r.random();
                let mut acc = 0.0;
                for (a, w) in atoms.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *a;
                    }
                }
                *atoms.last().expect("validated non-empty")
            }
            Laplace { scale } => {
                let e: f64 = r.sample(Exp1);
                if r.random::<bool>() {
                    scale * e
                } else {
                    -scale * e
                }
            }
            CantorPower { power } => sample_cantor_power(*power, r),
            StretchedExp => {
                // |X| = G^2 with G ~ Gamma(2, 1)
                let g: f64 = r.sample::<f64, _>(Exp1) + r.sample::<f64, _>(Exp1);
                if r.random::<bool>() {
                    g * g
                } else {
                    -g * g
                }
            }
            SignedRoot { base, c } => signed_root(base.sample(r), *c, r.random()),
        }
    }

    /// Exact characteristic function `E exp(itX)` when known in closed form.
    pub fn exact_cf(&self, t: f64) -> Option<Complex64> {
        use Distribution::*;
        let i = Complex64::i();
        match self {
            PointMass { at } => Some((i * t * at).exp()),
            Normal { mean, sd } => Some((i * t * mean - 0.5 * sd * sd * t * t).exp()),
            Uniform { lo, hi } => {
                let h = 0.5 * (hi - lo);
                let c = 0.5 * (hi + lo);
                let x = t * h;
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                Some((i * t * c).exp() * sinc)
            }
            Lattice { .. } | Discrete { .. } => {
                let atoms = self.atoms()?;
                Some(atoms.iter().map(|(x, w)| (i * t * x).exp() * w).sum())
            }
            Laplace { scale } => Some(Complex64::new(1.0 / (1.0 + scale * scale * t * t), 0.0)),
            CantorPower { power } => Some(Complex64::new(cantor_cf(t, 1e-15).powi(*power as i32), 0.0)),
            StretchedExp | SignedRoot { .. } => None,
        }
    }

    /// Finite atom list `(x, p)` for discrete laws of moderate size.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        use Distribution::*;
        match self {
            PointMass { at } => Some(vec![(*at, 1.0)]),
            Lattice { lo, hi } => {
                let n = (hi - lo + 1) as usize;
                if n > MAX_EXACT_ATOMS {
                    return None;
                }
                let p = 1.0 / n as f64;
                Some((*lo..=*hi).map(|x| (x as f64, p)).collect())
            }
            Discrete { atoms, weights } if atoms.len() <= MAX_EXACT_ATOMS => {
                Some(atoms.iter().copied().zip(weights.iter().copied()).collect())
            }
            _ => None,
        }
    }

    /// Exact `sup_a P(a < X <= a + 1)` when available.
    pub fn unit_concentration(&self) -> Option<f64> {
        use Distribution::*;
        match self {
            PointMass { .. } => Some(1.0),
            Normal { sd, .. } => {
                if *sd == 0.0 {
                    Some(1.0)
                } else {
                    Some(statrs::function::erf::erf(0.5 / (sd * std::f64::consts::SQRT_2)))
                }
            }
            Uniform { lo, hi } => Some((1.0 / (hi - lo)).min(1.0)),
            // every half-open unit interval holds exactly one integer
            Lattice { lo, hi } => Some(1.0 / (hi - lo + 1) as f64),
            Discrete { .. } => self.atoms().map(|a| atom_concentration(&a)),
            Laplace { scale } => Some(1.0 - (-0.5 / scale).exp()),
            StretchedExp => {
                // symmetric unimodal: the centred interval is optimal
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Some(1.0 - (1.0 + s) * (-s).exp())
            }
            CantorPower { .. } | SignedRoot { .. } => None,
        }
    }

    /// Bound `B` with `|X| <= B` almost surely, when bounded.
    pub fn support_bound(&self) -> Option<f64> {
        use Distribution::*;
        match self {
            PointMass { at } => Some(at.abs()),
            Normal { sd, mean } if *sd == 0.0 => Some(mean.abs()),
            Uniform { lo, hi } => Some(lo.abs().max(hi.abs())),
            Lattice { lo, hi } => Some((*lo as f64).abs().max((*hi as f64).abs())),
            Discrete { atoms, .. } => Some(atoms.iter().fold(0.0, |m, a| m.max(a.abs()))),
            CantorPower { power } => Some(*power as f64 * PI),
            _ => None,
        }
    }

    /// Whether `X` and `-X` have the same law.
    pub fn is_symmetric(&self) -> bool {
        use Distribution::*;
        match self {
            PointMass { at } => *at == 0.0,
            Normal { mean, .. } => *mean == 0.0,
            Uniform { lo, hi } => lo == &-hi,
            Lattice { lo, hi } => *lo == -hi,
            Discrete { .. } => {
                let Some(mut a) = self.atoms() else { return false };
                let mut b: Vec<(f64, f64)> = a.iter().map(|(x, p)| (-x, *p)).collect();
                a.sort_by(|x, y| x.0.total_cmp(&y.0));
                b.sort_by(|x, y| x.0.total_cmp(&y.0));
                a.iter().zip(&b).all(|(p, q)| p.0 == q.0 && (p.1 - q.1).abs() < 1e-12)
            }
            Laplace { .. } | CantorPower { .. } | StretchedExp | SignedRoot { .. } => true,
        }
    }
}

/// `zeta * sqrt(z^2 + c)` with `zeta = +1` when `positive`.
pub fn signed_root(z: f64, c: f64, positive: bool) -> f64 {
    let v = (z * z + c).sqrt();
    if positive {
        v
    } else {
        -v
    }
}

fn sample_cantor_power(power: u32, r: &mut Rng) -> f64 {
    // X = 2 pi sum_j D_j 3^-j, D_j a sum of `power` independent signs.
    let mut x = 0.0;
    let mut scale = 2.0 * PI;
    for _ in 0..CANTOR_DIGITS {
        scale /= 3.0;
        let mut ones = 0u32;
        let mut left = power;
        while left > 0 {
            let take = left.min(64);
            let bits: u64 = r.random();
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            ones += (bits & mask).count_ones();
            left -= take;
        }
        x += scale * (2.0 * ones as f64 - power as f64);
    }
    x
}

/// `sup_a P(a < X <= a + 1)` for a finite atom list.
pub fn atom_concentration(atoms: &[(f64, f64)]) -> f64 {
    let mut a: Vec<(f64, f64)> = atoms.to_vec();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    // the supremum is attained with the right endpoint on an atom
    let mut best = 0.0f64;
    let mut lo = 0;
    let mut window = 0.0;
    for hi in 0..a.len() {
        window += a[hi].1;
        while a[lo].0 <= a[hi].0 - 1.0 {
            window -= a[lo].1;
            lo += 1;
        }
        best = best.max(window);
    }
    best.min(1.0)
}

/// One draw of `n^{-1/2} (X_1 + ... + X_n)`.
pub fn normalized_sum(dist: &Distribution, n: usize, r: &mut Rng) -> f64 {
    let n = n.max(1);
    let s: f64 = (0..n).map(|_| dist.sample(r)).sum();
    s / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::RealAccumulator;
    use crate::seed::{rng, sample_vec};

    #[test]
    fn point_masses() {
        let mut r = rng(1);
        assert_eq!(normalized_sum(&Distribution::PointMass { at: 0.0 }, 7, &mut r), 0.0);
        assert_eq!(normalized_sum(&Distribution::PointMass { at: 1.0 }, 4, &mut r), 2.0);
    }

    #[test]
    fn normalized_normal_sum_has_unit_variance() {
        let d = Distribution::standard_normal();
        let n_rep = 20_000;
        let xs = sample_vec(n_rep, 5, |r| normalized_sum(&d, 100, r));
        let mut acc = RealAccumulator::default();
        for x in &xs {
            acc.push(x * x);
        }
        let e = acc.finish();
        // E S^2 = 1, Var(S^2) = 2
        assert!((e.value - 1.0).abs() < 3.0 * (2.0f64 / n_rep as f64).sqrt(), "{e:?}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = Distribution::cantor();
        let a = sample_vec(1000, 11, |r| d.sample(r));
        let b = sample_vec(1000, 11, |r| d.sample(r));
        assert_eq!(a, b);
    }

    #[test]
    fn cf_properties_on_grid() {
        let laws = [
            Distribution::standard_normal(),
            Distribution::Uniform { lo: -1.0, hi: 2.0 },
            Distribution::Lattice { lo: 1, hi: 5 },
            Distribution::unit_laplace(),
            Distribution::CantorPower { power: 3 },
            Distribution::PointMass { at: 0.7 },
            Distribution::Discrete { atoms: vec![0.0, 1.5], weights: vec![0.25, 0.75] },
        ];
        for d in &laws {
            assert!((d.exact_cf(0.0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            for k in 1..200 {
                let t = 0.173 * k as f64;
                let p = d.exact_cf(t).unwrap();
                let q = d.exact_cf(-t).unwrap();
                assert!(p.norm() <= 1.0 + 1e-12, "{d:?} t={t}");
                assert!((q - p.conj()).norm() < 1e-12, "{d:?} t={t}");
            }
        }
    }

    #[test]
    fn cantor_sample_matches_cf() {
        let d = Distribution::cantor();
        let xs = sample_vec(200_000, 3, |r| d.sample(r));
        for t in [0.3, 1.0, 2.5] {
            let mean: f64 = xs.iter().map(|x| (t * x).cos()).sum::<f64>() / xs.len() as f64;
            let exact = d.exact_cf(t).unwrap().re;
            assert!((mean - exact).abs() < 4.0 / (xs.len() as f64).sqrt(), "t={t}: {mean} vs {exact}");
        }
        assert!(xs.iter().all(|x| x.abs() <= PI));
    }

    #[test]
    fn concentration_values() {
        assert_eq!(Distribution::PointMass { at: 3.0 }.unit_concentration(), Some(1.0));
        assert_eq!(Distribution::Uniform { lo: -4.0, hi: 4.0 }.unit_concentration(), Some(1.0 / 8.0));
        assert_eq!(Distribution::Lattice { lo: 1, hi: 5 }.unit_concentration(), Some(0.2));
        let lat = Distribution::Lattice { lo: 1, hi: 5 }.atoms().unwrap();
        assert!((atom_concentration(&lat) - 0.2).abs() < 1e-15);
        let d = atom_concentration(&[(0.0, 0.3), (0.5, 0.3), (1.0, 0.4)]);
        assert!((d - 0.7).abs() < 1e-15);
    }

    #[test]
    fn stretched_exp_concentration_by_quadrature() {
        let r = crate::quad::integrate(|x: f64| 0.25 * (-x.abs().sqrt()).exp(), -0.5, 0.5, 1e-15, 1e-13, 200);
        let exact = Distribution::StretchedExp.unit_concentration().unwrap();
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn validation() {
        assert!(Distribution::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(Distribution::SignedRoot { base: Box::new(Distribution::standard_normal()), c: 0.0 }
            .validate()
            .is_err());
        assert!(Distribution::Discrete { atoms: vec![1.0], weights: vec![0.5] }.validate().is_err());
        assert!(Distribution::CantorPower { power: 0 }.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let d = Distribution::SignedRoot { base: Box::new(Distribution::standard_normal()), c: 1.0 };
        let s = serde_json::to_string(&d).unwrap();
        let back: Distribution = serde_json::from_str(&s).unwrap();
        assert_eq!(d, back);
    }
}
