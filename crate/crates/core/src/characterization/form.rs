//! Symmetric quadratic forms and their case labels.

use std::fmt;

use num_bigint::{BigInt, Sign};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default number of odd powers checked for case 2.1.
pub const DEFAULT_DEPTH: u32 = 50;
/// Relative threshold under which a real quantity counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Values between the threshold and this multiple of it are reported as
/// indeterminate instead of nonzero.
const GREY_FACTOR: f64 = 1e3;

/// `Q(x) = sum_{i,j} a_ij x_i x_j` with a symmetric nonzero matrix, `n >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymmetricQuadraticForm {
    a: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for SymmetricQuadraticForm {
    type Error = Error;
    fn try_from(a: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(a)
    }
}

impl From<SymmetricQuadraticForm> for Vec<Vec<f64>> {
    fn from(q: SymmetricQuadraticForm) -> Self {
        q.a
    }
}

impl SymmetricQuadraticForm {
    pub fn new(a: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.len();
        if n < 2 {
            return invalid("a quadratic form needs n >= 2");
        }
        if a.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: a.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n) });
        }
        if a.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return invalid("the zero matrix is excluded");
        }
        for i in 0..n {
            for j in 0..i {
                if (a[i][j] - a[j][i]).abs() > ZERO_THRESHOLD * scale {
                    return invalid(format!("matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(SymmetricQuadraticForm { a })
    }

    /// Parses rows of comma- or whitespace-separated numbers.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad matrix entry {s:?}: {e}"))))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    /// `Z_1 Z_2 - Z_2 Z_3`.
    pub fn example3() -> Self {
        Self::new(vec![vec![0.0, 0.5, 0.0], vec![0.5, 0.0, -0.5], vec![0.0, -0.5, 0.0]]).expect("valid")
    }

    /// `2 x_1^2 + 4 x_1 x_2 - x_2^2`.
    pub fn example4() -> Self {
        Self::new(vec![vec![2.0, 2.0], vec![2.0, -1.0]]).expect("valid")
    }

    /// `x_1^2 - x_2^2`.
    pub fn difference_of_squares() -> Self {
        Self::new(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.a[i][i]).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.a[i][j] * x[j];
            }
            s += x[i] * row;
        }
        s
    }

    fn integer_entries(&self) -> Option<Vec<Vec<i64>>> {
        const LIMIT: f64 = 9.007_199_254_740_992e15;
        self.a
            .iter()
            .map(|row| row.iter().map(|&x| (x.fract() == 0.0 && x.abs() < LIMIT).then_some(x as i64)).collect())
            .collect()
    }

    /// Same form with indices relabeled by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return invalid("not a permutation");
        }
        Self::new((0..n).map(|i| (0..n).map(|j| self.a[perm[i]][perm[j]]).collect()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "1")]
    Case1,
    #[serde(rename = "2.1")]
    Case2_1,
    #[serde(rename = "2.2.1")]
    Case2_2_1,
    #[serde(rename = "2.2.2")]
    Case2_2_2,
    #[serde(rename = "2.3")]
    Case2_3,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

impl CaseLabel {
    /// Whether a characterization verdict is known for the case.
    pub fn cp_known(self) -> bool {
        matches!(self, CaseLabel::Case1 | CaseLabel::Case2_1 | CaseLabel::Case2_2_1)
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::Case1 => "1",
            CaseLabel::Case2_1 => "2.1",
            CaseLabel::Case2_2_1 => "2.2.1",
            CaseLabel::Case2_2_2 => "2.2.2",
            CaseLabel::Case2_3 => "2.3",
            CaseLabel::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: CaseLabel,
    pub trace: f64,
    /// `sum_i a_ii^{2k+1} / sum_i |a_ii|^{2k+1}` for `k = 0..=depth`, both
    /// sums taken over the diagonal entries left after removing `+-x` pairs
    /// (0 when nothing is left).
    pub relative_odd_sums: Vec<f64>,
    pub off_diagonal_max: f64,
    /// Integer matrices are decided exactly.
    pub exact: bool,
    pub depth: u32,
    /// First `k >= 1` with a vanishing odd-power sum.
    pub vanishing_k: Option<u32>,
}

#[derive(Clone, Copy, PartialEq)]
enum Zero {
    Yes,
    No,
    Unsure,
}

fn real_zero(rel: f64) -> Zero {
    if rel.abs() <= ZERO_THRESHOLD {
        Zero::Yes
    } else if rel.abs() <= ZERO_THRESHOLD * GREY_FACTOR {
        Zero::Unsure
    } else {
        Zero::No
    }
}

/// Relative odd-power sums computed after removing exactly cancelling `+-x`
/// pairs, so that roundoff in the dominant terms cannot fake a zero.
fn relative_odd_sums(diag: &[f64], depth: u32) -> Vec<f64> {
    let mut pos: Vec<f64> = diag.iter().copied().filter(|&x| x > 0.0).collect();
    let mut neg: Vec<f64> = diag.iter().filter(|&&x| x < 0.0).map(|x| -x).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut rest: Vec<f64> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < pos.len() && j < neg.len() {
        match pos[i].total_cmp(&neg[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                rest.push(pos[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                rest.push(-neg[j]);
                j += 1;
            }
        }
    }
    rest.extend(&pos[i..]);
    rest.extend(neg[j..].iter().map(|x| -x));
    let rest_max = rest.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..=depth)
        .map(|k| {
            if rest_max == 0.0 {
                return 0.0;
            }
            let p = 2 * k as i32 + 1;
            let denom: f64 = rest.iter().map(|x| (x.abs() / rest_max).powi(p)).sum();
            let num: f64 = rest.iter().map(|x| (x / rest_max).powi(p)).sum();
            num / denom
        })
        .collect()
}

/// Assigns the case label. Integer matrices use exact big-integer sums;
/// real matrices use [`ZERO_THRESHOLD`] relative to the matching absolute sums.
pub fn classify(q: &SymmetricQuadraticForm, depth: u32) -> Classification {
    let n = q.n();
    let a = q.matrix();
    let diag: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let off_diagonal_max = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).fold(0.0f64, |m, (i, j)| m.max(a[i][j].abs()));
    let rel = relative_odd_sums(&diag, depth);
    let ints = q.integer_entries();
    let exact = ints.is_some();
    let zero_at: Box<dyn Fn(u32) -> Zero> = match &ints {
        Some(m) => {
            let d: Vec<BigInt> = (0..n).map(|i| BigInt::from(m[i][i])).collect();
            Box::new(move |k: u32| {
                let s = d.iter().fold(BigInt::from(0), |acc, x| acc + x.pow(2 * k + 1));
                if s.sign() == Sign::NoSign {
                    Zero::Yes
                } else {
                    Zero::No
                }
            })
        }
        None => Box::new(|k: u32| real_zero(rel[k as usize])),
    };
    let diag_zero = if exact { diag.iter().all(|&x| x == 0.0) } else { diag.iter().all(|x| x.abs() <= ZERO_THRESHOLD * scale) };
    let off_zero = if exact { off_diagonal_max == 0.0 } else { off_diagonal_max <= ZERO_THRESHOLD * scale };
    let mut vanishing_k = None;
    let label = if diag_zero {
        CaseLabel::Case1
    } else {
        match zero_at(0) {
            Zero::Yes if off_zero => CaseLabel::Case2_2_1,
            Zero::Yes => CaseLabel::Case2_2_2,
            Zero::Unsure => CaseLabel::Indeterminate,
            Zero::No => {
                let mut label = CaseLabel::Case2_1;
                for k in 1..=depth {
                    match zero_at(k) {
                        Zero::Yes => {
                            vanishing_k = Some(k);
                            label = CaseLabel::Case2_3;
                            break;
                        }
                        Zero::Unsure => {
                            label = CaseLabel::Indeterminate;
                            break;
                        }
                        Zero::No => {}
                    }
                }
                label
            }
        }
    };
    drop(zero_at);
    Classification { label, trace: q.trace(), relative_odd_sums: rel, off_diagonal_max, exact, depth, vanishing_k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn form(a: Vec<Vec<f64>>) -> SymmetricQuadraticForm {
        SymmetricQuadraticForm::new(a).unwrap()
    }

    #[test]
    fn listed_examples() {
        assert_eq!(classify(&form(vec![vec![0.0, 1.0], vec![1.0, 0.0]]), DEFAULT_DEPTH).label, CaseLabel::Case1);
        assert_eq!(classify(&form(vec![vec![1.0, 0.0], vec![0.0, -1.0]]), DEFAULT_DEPTH).label, CaseLabel::Case2_2_1);
        let c = classify(&SymmetricQuadraticForm::example4(), DEFAULT_DEPTH);
        assert_eq!(c.label, CaseLabel::Case2_1);
        assert!(c.exact);
        assert_eq!(classify(&form(vec![vec![1.0, 1.0], vec![1.0, -1.0]]), DEFAULT_DEPTH).label, CaseLabel::Case2_2_2);
        assert_eq!(classify(&SymmetricQuadraticForm::example3(), DEFAULT_DEPTH).label, CaseLabel::Case1);
    }

    #[test]
    fn odd_sum_oracle_for_example4() {
        // 2^{2k+1} - 1 over 2^{2k+1} + 1
        let c = classify(&SymmetricQuadraticForm::example4(), 10);
        for (k, r) in c.relative_odd_sums.iter().enumerate() {
            let p = 2f64.powi(2 * k as i32 + 1);
            assert!((r - (p - 1.0) / (p + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn real_case_23() {
        // 1 + 1 - 2 = 2 at k=0, 1 + 1 - 2 = 0 at k=1 for entries 1, 1, -2^{1/3}
        let b = -(2f64.cbrt());
        let c = classify(&form(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, b]]), DEFAULT_DEPTH);
        assert!(!c.exact);
        assert_eq!(c.label, CaseLabel::Case2_3);
        assert_eq!(c.vanishing_k, Some(1));
    }

    #[test]
    fn cancelling_pairs_do_not_fake_zero() {
        // sums are exactly 1 for every k though the magnitudes grow like 2^{2k+1}
        let m = form(vec![vec![2.5, 0.0, 0.0], vec![0.0, -2.5, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(classify(&m, DEFAULT_DEPTH).label, CaseLabel::Case2_1);
        let m = form(vec![vec![2.0, 0.0, 0.0], vec![0.0, -2.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(classify(&m, DEFAULT_DEPTH).label, CaseLabel::Case2_1);
    }

    #[test]
    fn grey_zone_is_indeterminate() {
        let m = form(vec![vec![1.0, 0.0], vec![0.0, -(1.0 - 1e-11)]]);
        assert_eq!(classify(&m, DEFAULT_DEPTH).label, CaseLabel::Indeterminate);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(SymmetricQuadraticForm::new(vec![vec![1.0]]).is_err());
        assert!(SymmetricQuadraticForm::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(SymmetricQuadraticForm::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(SymmetricQuadraticForm::new(vec![vec![0.0, 1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn csv_and_json_input() {
        let q = SymmetricQuadraticForm::from_csv("# form\n2, 2\n2 -1\n").unwrap();
        assert_eq!(q, SymmetricQuadraticForm::example4());
        let j: SymmetricQuadraticForm = serde_json::from_str("[[0,1],[1,0]]").unwrap();
        assert_eq!(j.trace(), 0.0);
        assert!(serde_json::from_str::<SymmetricQuadraticForm>("[[0,1],[2,0]]").is_err());
        assert!(SymmetricQuadraticForm::from_csv("1,x\n0,1").is_err());
    }

    #[test]
    fn evaluation() {
        let q = SymmetricQuadraticForm::example3();
        assert_eq!(q.eval(&[1.0, 2.0, 3.0]), 2.0 - 6.0);
    }

    proptest! {
        #[test]
        fn label_invariant_under_relabeling(
            entries in proptest::collection::vec(-3i32..=3, 10),
            real in proptest::bool::ANY,
            seed in 0u64..1000,
        ) {
            let n = 4;
            let mut a = vec![vec![0.0; n]; n];
            let mut it = entries.iter();
            for i in 0..n {
                for j in i..n {
                    let v = *it.next().unwrap() as f64 * if real { 0.37 } else { 1.0 };
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
            prop_assume!(a.iter().flatten().any(|&x| x != 0.0));
            let q = form(a);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let p = q.permuted(&perm).unwrap();
            prop_assert_eq!(classify(&q, 20).label, classify(&p, 20).label);
        }
    }
}
