//! Polynomial maps used as the functionals `f`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A real polynomial map on `R^d`.
pub trait Polynomial: Sync {
    /// Number of input coordinates.
    fn dimension(&self) -> usize;

    /// Evaluates without checking the input length.
    fn eval_unchecked(&self, x: &[f64]) -> f64;

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }
}

/// Monic polynomial `x^m + a_{m-1} x^{m-1} + ... + a_0`, `m >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial1D {
    /// `a_0, ..., a_{m-1}`; the degree is the length.
    coeffs: Vec<f64>,
}

impl Polynomial1D {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return invalid(format!("degree must be at least 2, got {}", coeffs.len()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("coefficients must be finite");
        }
        Ok(Polynomial1D { coeffs })
    }

    /// `x^m`.
    pub fn monomial(m: usize) -> Result<Self> {
        Self::new(vec![0.0; m])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(1.0, |acc, &c| acc * x + c)
    }
}

impl Polynomial for Polynomial1D {
    fn dimension(&self) -> usize {
        1
    }
    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }
}

/// `a_m x^m + ... + a_1 x`, no constant term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VinogradovPolynomial {
    /// `a_1, ..., a_m`.
    coeffs: Vec<f64>,
}

impl VinogradovPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return invalid(format!("degree must be at least 2, got {}", coeffs.len()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("coefficients must be finite");
        }
        Ok(VinogradovPolynomial { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval1(&self, x: f64) -> f64 {
        x * self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Upper bound on `|f'(x)|` for `|x| <= r`.
    pub fn derivative_bound(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| (j + 1) as f64 * c.abs() * r.powi(j as i32))
            .sum()
    }
}

impl Polynomial for VinogradovPolynomial {
    fn dimension(&self) -> usize {
        1
    }
    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }
}

/// `sum alpha(m_1..m_k) x_1^{m_1} ... x_k^{m_k}` with `alpha(0, ..., 0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexPolynomial {
    dimension: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MultiIndexPolynomial {
    pub fn new(dimension: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        if dimension == 0 {
            return invalid("dimension must be positive");
        }
        let mut map = BTreeMap::new();
        for (idx, c) in terms {
            if idx.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: idx.len() });
            }
            if !c.is_finite() {
                return invalid("coefficients must be finite");
            }
            if c == 0.0 {
                continue;
            }
            if idx.iter().all(|&e| e == 0) {
                return invalid("constant term must vanish");
            }
            *map.entry(idx).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        if map.is_empty() {
            return invalid("polynomial has no nonzero terms");
        }
        Ok(MultiIndexPolynomial { dimension, terms: map })
    }

    /// `x_1 x_2 ... x_k`.
    pub fn product(k: usize) -> Result<Self> {
        Self::new(k, [(vec![1; k], 1.0)])
    }

    /// `x_1^m + ... + x_k^m`.
    pub fn power_sum(k: usize, m: u32) -> Result<Self> {
        Self::new(
            k,
            (0..k).map(|i| {
                let mut idx = vec![0; k];
                idx[i] = m;
                (idx, 1.0)
            }),
        )
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.terms
    }

    /// Total degree `M`.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|i| i.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Largest `|alpha|` among the terms of total degree `M`.
    pub fn alpha_star(&self) -> f64 {
        let deg = self.total_degree();
        self.terms
            .iter()
            .filter(|(i, _)| i.iter().sum::<u32>() == deg)
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max)
    }
}

impl Polynomial for MultiIndexPolynomial {
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(idx, c)| c * idx.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn monomial_square() {
        let f = Polynomial1D::monomial(2).unwrap();
        assert_eq!(f.eval(&[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn cubic_all_ones() {
        let f = Polynomial1D::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(f.eval(&[2.0]).unwrap(), 15.0);
    }

    #[test]
    fn product_at_ones() {
        let f = MultiIndexPolynomial::product(5).unwrap();
        assert_eq!(f.eval(&[1.0; 5]).unwrap(), 1.0);
        assert_eq!(f.total_degree(), 5);
        assert_eq!(f.alpha_star(), 1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let f = MultiIndexPolynomial::product(3).unwrap();
        assert_eq!(f.eval(&[1.0, 2.0]), Err(Error::DimensionMismatch { expected: 3, got: 2 }));
        let g = Polynomial1D::monomial(2).unwrap();
        assert!(g.eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn invalid_constructions() {
        assert!(Polynomial1D::new(vec![1.0]).is_err());
        assert!(VinogradovPolynomial::new(vec![1.0]).is_err());
        assert!(MultiIndexPolynomial::new(2, [(vec![0, 0], 1.0)]).is_err());
        assert!(MultiIndexPolynomial::new(2, [(vec![1, 0], 0.0)]).is_err());
    }

    #[test]
    fn alpha_star_uses_top_degree_only() {
        let f = MultiIndexPolynomial::new(2, [(vec![2, 0], -3.0), (vec![1, 1], 0.5), (vec![1, 0], 10.0)]).unwrap();
        assert_eq!(f.total_degree(), 2);
        assert_eq!(f.alpha_star(), 3.0);
    }

    #[test]
    fn vinogradov_eval() {
        let f = VinogradovPolynomial::new(vec![1.0, 2.0, 3.0]).unwrap();
        // x + 2x^2 + 3x^3 at 2
        assert_eq!(f.eval1(2.0), 2.0 + 8.0 + 24.0);
    }

    proptest! {
        #[test]
        fn horner_matches_power_sum(coeffs in prop::collection::vec(-10.0f64..10.0, 2..8), x in -10.0f64..10.0) {
            let f = Polynomial1D::new(coeffs.clone()).unwrap();
            let m = coeffs.len();
            let naive: f64 = coeffs.iter().enumerate().map(|(i, c)| c * x.powi(i as i32)).sum::<f64>() + x.powi(m as i32);
            let scale: f64 = coeffs.iter().enumerate().map(|(i, c)| (c * x.powi(i as i32)).abs()).sum::<f64>() + x.abs().powi(m as i32);
            prop_assert!((f.eval1(x) - naive).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
