//! Exact counts `J_k(P)` of solutions of `sum_i (x_i^j - y_i^j) = 0`,
//! `j = 1..m`, with `1 <= x_i, y_i <= P`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest `P^{2k}` accepted by the enumeration method.
pub const MAX_ENUMERATE_PAIRS: f64 = 1e8;
/// Largest number of multisets accepted by the histogram method.
pub const MAX_HISTOGRAM_KEYS: f64 = 3e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Enumerate,
    SignatureHistogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiophantineCount {
    pub p: u64,
    pub m: u32,
    pub k: u32,
    pub count: u128,
}

/// Predicted work for a count, without running it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountCost {
    /// Elementary operations (tuple pairs or multisets visited).
    pub operations: f64,
    /// Peak memory in bytes.
    pub memory_bytes: f64,
    pub feasible: bool,
}

fn binomial(n: u64, r: u64) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn count_cost(p: u64, m: u32, k: u32, method: CountMethod) -> CountCost {
    match method {
        CountMethod::Enumerate => {
            let tuples = (p as f64).powi(k as i32);
            let ops = tuples * tuples;
            CountCost { operations: ops, memory_bytes: tuples * 16.0 * m as f64, feasible: ops <= MAX_ENUMERATE_PAIRS }
        }
        CountMethod::SignatureHistogram => {
            let keys = binomial(p + k as u64 - 1, k as u64);
            let fits = radices(p, m, k).is_some();
            CountCost { operations: keys * m as f64, memory_bytes: keys * 40.0, feasible: fits && keys <= MAX_HISTOGRAM_KEYS }
        }
    }
}

/// Mixed radices `k(P^j - 1) + 1` for packing power sums into a `u128`.
fn radices(p: u64, m: u32, k: u32) -> Option<Vec<u128>> {
    let mut total: u128 = 1;
    let mut out = Vec::with_capacity(m as usize);
    for j in 1..=m {
        let pj = (p as u128).checked_pow(j)?;
        let r = (k as u128).checked_mul(pj - 1)?.checked_add(1)?;
        total = total.checked_mul(r)?;
        out.push(r);
    }
    Some(out)
}

pub fn jk_count(p: u64, m: u32, k: u32, method: CountMethod) -> Result<DiophantineCount> {
    if p == 0 || m < 1 || k < 1 {
        return invalid("need P >= 1, m >= 1, k >= 1");
    }
    let cost = count_cost(p, m, k, method);
    if !cost.feasible {
        return Err(Error::Infeasible {
            what: format!("{method:?} count for P={p}, m={m}, k={k}"),
            estimate: cost.operations,
        });
    }
    let count = match method {
        CountMethod::Enumerate => enumerate(p, m, k),
        CountMethod::SignatureHistogram => histogram(p, m, k),
    };
    Ok(DiophantineCount { p, m, k, count })
}

fn power_sums(tuple: &[u64], m: u32) -> Vec<u128> {
    (1..=m).map(|j| tuple.iter().map(|&x| (x as u128).pow(j)).sum()).collect()
}

fn decode(mut idx: u64, p: u64, k: u32, out: &mut [u64]) {
    for slot in out.iter_mut().take(k as usize) {
        *slot = idx % p + 1;
        idx /= p;
    }
}

/// Literal pair loop over all `P^{2k}` candidate solutions.
fn enumerate(p: u64, m: u32, k: u32) -> u128 {
    let n = p.pow(k);
    let sums: Vec<Vec<u128>> = (0..n)
        .map(|i| {
            let mut t = vec![0; k as usize];
            decode(i, p, k, &mut t);
            power_sums(&t, m)
        })
        .collect();
    sums.par_iter()
        .map(|x| sums.iter().filter(|y| *y == x).count() as u128)
        .sum()
}

/// `sum_v N(v)^2` over power-sum signatures of ordered k-tuples, visiting each
/// multiset once with weight `k! / prod(mult!)`.
fn histogram(p: u64, m: u32, k: u32) -> u128 {
    let rad = radices(p, m, k).expect("checked by cost");
    let k_fact: u128 = (1..=k as u128).product();
    let merged = (1..=p)
        .into_par_iter()
        .map(|first| {
            let mut map: HashMap<u128, u128> = HashMap::new();
            let mut tuple = vec![first; k as usize];
            loop {
                let key = pack(&tuple, m, k, &rad);
                *map.entry(key).or_insert(0) += k_fact / multiplicity_denominator(&tuple);
                if !next_multiset(&mut tuple, p) {
                    break;
                }
            }
            map
        })
        .reduce(HashMap::new, |mut a, b| {
            for (key, v) in b {
                *a.entry(key).or_insert(0) += v;
            }
            a
        });
    merged.values().map(|n| n * n).sum()
}

fn pack(tuple: &[u64], m: u32, k: u32, rad: &[u128]) -> u128 {
    let mut key = 0u128;
    for (j, r) in (1..=m).rev().zip(rad.iter().rev()) {
        let s: u128 = tuple.iter().map(|&x| (x as u128).pow(j)).sum();
        key = key * r + (s - k as u128);
    }
    key
}

fn multiplicity_denominator(tuple: &[u64]) -> u128 {
    let mut d = 1u128;
    let mut run = 1u128;
    for w in tuple.windows(2) {
        if w[0] == w[1] {
            run += 1;
            d *= run;
        } else {
            run = 1;
        }
    }
    d
}

/// Advances a nondecreasing tuple whose first entry stays fixed.
fn next_multiset(t: &mut [u64], p: u64) -> bool {
    let k = t.len();
    let mut i = k;
    while i > 1 {
        i -= 1;
        if t[i] < p {
            let v = t[i] + 1;
            for slot in &mut t[i..] {
                *slot = v;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(p: u64, m: u32, k: u32) -> u128 {
        // independent oracle: direct loop over x and y tuples
        let n = p.pow(k);
        let mut count = 0;
        let mut x = vec![0; k as usize];
        let mut y = vec![0; k as usize];
        for i in 0..n {
            decode(i, p, k, &mut x);
            for l in 0..n {
                decode(l, p, k, &mut y);
                if (1..=m).all(|j| {
                    x.iter().map(|&v| (v as i128).pow(j)).sum::<i128>() == y.iter().map(|&v| (v as i128).pow(j)).sum::<i128>()
                }) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn j1_is_p() {
        for p in 1..=12 {
            for m in 2..=4 {
                assert_eq!(jk_count(p, m, 1, CountMethod::SignatureHistogram).unwrap().count, p as u128);
            }
        }
    }

    #[test]
    fn j2_of_2_is_6() {
        assert_eq!(brute(2, 3, 2), 6);
        assert_eq!(jk_count(2, 3, 2, CountMethod::Enumerate).unwrap().count, 6);
    }

    #[test]
    fn j2_closed_form() {
        for p in 2..=10u64 {
            let want = (2 * p * p - p) as u128;
            assert_eq!(jk_count(p, 2, 2, CountMethod::SignatureHistogram).unwrap().count, want);
            assert_eq!(jk_count(p, 3, 2, CountMethod::Enumerate).unwrap().count, want);
        }
    }

    #[test]
    fn methods_agree_with_oracle() {
        for p in 1..=5 {
            for m in 1..=3 {
                for k in 1..=3 {
                    let o = brute(p, m, k);
                    assert_eq!(jk_count(p, m, k, CountMethod::Enumerate).unwrap().count, o);
                    assert_eq!(jk_count(p, m, k, CountMethod::SignatureHistogram).unwrap().count, o);
                }
            }
        }
    }

    #[test]
    fn monotone_and_bracketed() {
        for m in 2..=3 {
            for k in 1..=3u32 {
                let mut prev = 0;
                for p in 1..=7u64 {
                    let c = jk_count(p, m, k, CountMethod::SignatureHistogram).unwrap().count;
                    assert!(c >= prev);
                    assert!(c >= (p as u128).pow(k) && c <= (p as u128).pow(2 * k));
                    if k > 1 {
                        let lower = jk_count(p, m, k - 1, CountMethod::SignatureHistogram).unwrap().count;
                        assert!(c >= lower);
                    }
                    prev = c;
                }
            }
        }
    }

    #[test]
    fn infeasible_enumeration_rejected() {
        match jk_count(50, 3, 4, CountMethod::Enumerate) {
            Err(Error::Infeasible { estimate, .. }) => assert_eq!(estimate, 50f64.powi(8)),
            other => panic!("{other:?}"),
        }
        assert!(count_cost(50, 3, 2, CountMethod::SignatureHistogram).feasible);
    }

    #[test]
    fn multiset_weights_cover_all_tuples() {
        let (p, k) = (4u64, 3u32);
        let mut total = 0u128;
        for first in 1..=p {
            let mut t = vec![first; k as usize];
            loop {
                total += 6 / multiplicity_denominator(&t);
                if !next_multiset(&mut t, p) {
                    break;
                }
            }
        }
        assert_eq!(total, 64);
    }
}
