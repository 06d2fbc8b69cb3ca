//! Gaussian elements `Y` with covariance eigenvalues `sigma_j^2` and shifts
//! `a_j`, described by a finite head, an explicit tail and an optional
//! geometric continuation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Continuation terms below this fraction of `sigma_1^2` are merged into a
/// constant shift.
pub const NEGLIGIBLE_VARIANCE: f64 = 1e-13;

/// JSON schema:
///
/// ```json
/// {
///   "k": 4,
///   "head_variance": 1.0,
///   "head_shift": [0.5, 0.0],
///   "tail_variances": [0.25],
///   "tail_shift": [0.0],
///   "geometric_ratio": 0.5,
///   "tail_shift_remainder": 0.0
/// }
/// ```
///
/// `head_shift` and `tail_shift` are padded with zeros. With a geometric
/// ratio `rho`, the tail continues with `sigma^2 = s rho^i`, `i >= 1`, where
/// `s` is the last explicit tail variance (or `head_variance` when the list is
/// empty), and shifts with `a^2 = rem (1 - rho) rho^{i-1}` summing to
/// `tail_shift_remainder`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertGaussianSpec {
    pub k: usize,
    pub head_variance: f64,
    #[serde(default)]
    pub head_shift: Vec<f64>,
    #[serde(default)]
    pub tail_variances: Vec<f64>,
    #[serde(default)]
    pub tail_shift: Vec<f64>,
    #[serde(default)]
    pub geometric_ratio: Option<f64>,
    #[serde(default)]
    pub tail_shift_remainder: f64,
}

/// Finite working form of a spec: noncentral head, explicit tail terms
/// `(sigma^2, a^2)`, and the mean of whatever was merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub k: usize,
    pub s1: f64,
    pub lambda: f64,
    pub tail: Vec<(f64, f64)>,
    pub shift: f64,
}

impl HilbertGaussianSpec {
    /// Only the head: `k` coordinates with variance `s1` and shift `head_shift`.
    pub fn head_only(k: usize, s1: f64, head_shift: Vec<f64>) -> Self {
        HilbertGaussianSpec {
            k,
            head_variance: s1,
            head_shift,
            tail_variances: vec![],
            tail_shift: vec![],
            geometric_ratio: None,
            tail_shift_remainder: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return invalid("multiplicity k must be at least 1");
        }
        if !(self.head_variance.is_finite() && self.head_variance > 0.0) {
            return invalid("head variance must be positive");
        }
        if self.head_shift.len() > self.k {
            return invalid("head shift has more than k entries");
        }
        if self.tail_shift.len() > self.tail_variances.len() {
            return invalid("tail shift is longer than the tail variance list");
        }
        let all_finite = self.head_shift.iter().chain(&self.tail_shift).chain(&self.tail_variances).all(|v| v.is_finite());
        if !all_finite {
            return invalid("non-finite spec entry");
        }
        let mut prev = self.head_variance;
        for (i, &v) in self.tail_variances.iter().enumerate() {
            if !(v >= 0.0) {
                return invalid("tail variances must be nonnegative");
            }
            if i == 0 && v >= prev {
                return invalid("the first tail variance must be below the head variance");
            }
            if v > prev {
                return invalid("tail variances must be nonincreasing");
            }
            prev = v;
        }
        match self.geometric_ratio {
            Some(rho) if !(rho > 0.0 && rho < 1.0) => return invalid("geometric ratio must lie in (0, 1)"),
            None if self.tail_shift_remainder != 0.0 => {
                return invalid("a tail shift remainder needs a geometric continuation")
            }
            _ => {}
        }
        if !(self.tail_shift_remainder >= 0.0 && self.tail_shift_remainder.is_finite()) {
            return invalid("tail shift remainder must be a finite nonnegative squared norm");
        }
        Ok(())
    }

    pub fn s1(&self) -> f64 {
        self.head_variance
    }

    /// `|a_k|^2`, the squared norm of the head shift.
    pub fn head_norm_sq(&self) -> f64 {
        self.head_shift.iter().map(|a| a * a).sum()
    }

    /// `|a_3|^2` over the first three coordinates of the full shift.
    pub fn a3_norm_sq(&self) -> f64 {
        let head = self.head_shift.iter().copied().chain(std::iter::repeat(0.0)).take(self.k);
        let tail = self.tail_shift.iter().copied().chain(std::iter::repeat(0.0)).take(self.tail_variances.len());
        head.chain(tail).take(3).map(|a| a * a).sum()
    }

    /// Largest tail variance, or 0 without a tail.
    pub fn first_tail_variance(&self) -> f64 {
        match (self.tail_variances.first(), self.geometric_ratio) {
            (Some(&v), _) => v,
            (None, Some(rho)) => self.head_variance * rho,
            (None, None) => 0.0,
        }
    }

    pub(crate) fn continuation_base(&self) -> f64 {
        self.tail_variances.last().copied().unwrap_or(self.head_variance)
    }

    /// Explicit tail terms `(sigma^2, a^2)`.
    pub fn explicit_tail(&self) -> Vec<(f64, f64)> {
        self.tail_variances
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, self.tail_shift.get(i).map_or(0.0, |a| a * a)))
            .collect()
    }

    /// The `i`-th continuation term, `i >= 1`.
    pub(crate) fn continuation_term(&self, i: u32) -> Option<(f64, f64)> {
        let rho = self.geometric_ratio?;
        let v = self.continuation_base() * rho.powi(i as i32);
        let a2 = self.tail_shift_remainder * (1.0 - rho) * rho.powi(i as i32 - 1);
        Some((v, a2))
    }

    /// Expands the continuation until its terms fall below
    /// `NEGLIGIBLE_VARIANCE * sigma_1^2`; the rest enters `shift` through its
    /// exact mean.
    pub fn spectrum(&self) -> Spectrum {
        let s1 = self.head_variance;
        let mut tail = self.explicit_tail();
        let mut shift = 0.0;
        if let Some(rho) = self.geometric_ratio {
            let mut i = 1;
            loop {
                let (v, a2) = self.continuation_term(i).expect("ratio present");
                if v < NEGLIGIBLE_VARIANCE * s1 && a2 < NEGLIGIBLE_VARIANCE * s1 {
                    // remaining mean: sum_{j >= i} (v_j + a2_j)
                    let base = self.continuation_base();
                    shift = base * rho.powi(i as i32) / (1.0 - rho) + self.tail_shift_remainder * rho.powi(i as i32 - 1);
                    break;
                }
                tail.push((v, a2));
                i += 1;
            }
        }
        Spectrum { k: self.k, s1, lambda: self.head_norm_sq(), tail, shift }
    }
}
