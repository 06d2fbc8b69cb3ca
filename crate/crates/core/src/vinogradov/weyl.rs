//! Weyl sums, the constants of the classical mean value theorem, and the
//! periodic unit-cell integral of `|F|^{2k}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::poly::VinogradovPolynomial;

/// `F = sum_{x=1}^{P} exp{2 pi i f(x)}`.
pub fn weyl_sum(p: u64, f: &VinogradovPolynomial) -> Complex64 {
    (1..=p)
        .map(|x| {
            let phase = f.eval1(x as f64).rem_euclid(1.0);
            Complex64::from_polar(1.0, 2.0 * PI * phase)
        })
        .sum()
}

/// `Delta(tau) = m(m+1)(1 - (1 - 1/m)^tau) / 2` and `ln c_tau` with
/// `c_tau = (m tau)^{6 m tau} (2m)^{4 m (m+1) tau}`.
pub fn vinogradov_constants(m: u32, tau: u32) -> Result<(f64, f64)> {
    if m <= 2 || tau < 1 {
        return invalid("need m > 2 and tau >= 1");
    }
    let (mf, tf) = (m as f64, tau as f64);
    let delta = 0.5 * mf * (mf + 1.0) * (1.0 - (1.0 - 1.0 / mf).powi(tau as i32));
    let ln_c = 6.0 * mf * tf * (mf * tf).ln() + 4.0 * mf * (mf + 1.0) * tf * (2.0 * mf).ln();
    Ok((delta, ln_c))
}

/// Node counts `k(P^j - 1) + 1`, the smallest periodic rectangle rules that
/// integrate every frequency of `|F|^{2k}` exactly.
pub fn exact_node_counts(p: u64, m: u32, k: u32) -> Vec<u64> {
    (1..=m).map(|j| k as u64 * (p.pow(j) - 1) + 1).collect()
}

/// `int_{[0,1]^m} |F(alpha)|^{2k} d alpha` by the periodic rectangle rule with
/// `nodes[j-1]` points along `alpha_j`.
///
/// Phases are reduced with integer arithmetic, so each node value is exact up
/// to one rounding of the final phase.
pub fn unit_cell_moment(p: u64, m: u32, k: u32, nodes: &[u64]) -> Result<f64> {
    if nodes.len() != m as usize || nodes.contains(&0) {
        return invalid("one positive node count per coefficient is required");
    }
    let total: u64 = nodes.iter().product();
    // powers x^j mod n_j, per coefficient j
    let pow_mod: Vec<Vec<u64>> = (1..=m)
        .zip(nodes)
        .map(|(j, &n)| (1..=p).map(|x| ((x as u128).pow(j) % n as u128) as u64).collect())
        .collect();
    let inner = nodes[0];
    let outer = total / inner;
    // collected before summing so the result does not depend on the thread count
    let parts: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|o| {
            // decode coefficients alpha_2..alpha_m for this outer index
            let mut idx = o;
            let mut fixed = vec![0u64; m as usize];
            for (j, &n) in nodes.iter().enumerate().skip(1) {
                fixed[j] = idx % n;
                idx /= n;
            }
            let mut acc = 0.0;
            for a1 in 0..inner {
                fixed[0] = a1;
                let mut f = Complex64::new(0.0, 0.0);
                for x in 0..p as usize {
                    let mut phase = 0.0;
                    for j in 0..m as usize {
                        let num = (fixed[j] as u128 * pow_mod[j][x] as u128) % nodes[j] as u128;
                        phase += num as f64 / nodes[j] as f64;
                    }
                    f += Complex64::from_polar(1.0, 2.0 * PI * phase.fract());
                }
                acc += f.norm_sqr().powi(k as i32);
            }
            acc
        })
        .collect();
    Ok(parts.iter().sum::<f64>() / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vinogradov::count::{jk_count, CountMethod};
    use proptest::prelude::*;

    #[test]
    fn zero_coefficients_give_p() {
        let f = VinogradovPolynomial::new(vec![0.0, 0.0, 0.0]).unwrap();
        assert!((weyl_sum(7, &f) - Complex64::new(7.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn half_frequency_cancels() {
        let f = VinogradovPolynomial::new(vec![0.5, 0.0]).unwrap();
        assert!(weyl_sum(2, &f).norm() < 1e-12);
    }

    #[test]
    fn constants_examples() {
        let (d, _) = vinogradov_constants(3, 3).unwrap();
        assert!((d - 38.0 / 9.0).abs() < 1e-12);
        let (d, ln_c) = vinogradov_constants(3, 1).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        // (3)^{18} (6)^{48}
        let direct = 18.0 * 3f64.ln() + 48.0 * 6f64.ln();
        assert!((ln_c - direct).abs() < 1e-12);
        assert!((ln_c - 105.78).abs() < 0.01);
        assert!(vinogradov_constants(2, 1).is_err());
    }

    #[test]
    fn unit_cell_matches_counts() {
        for p in 1..=4u64 {
            for k in 1..=2u32 {
                let want = jk_count(p, 3, k, CountMethod::Enumerate).unwrap().count as f64;
                let got = unit_cell_moment(p, 3, k, &exact_node_counts(p, 3, k)).unwrap();
                assert!((got - want).abs() <= 1e-9 * want, "P={p} k={k}: {got} vs {want}");
            }
        }
    }

    proptest! {
        #[test]
        fn weyl_modulus_at_most_p(c in prop::collection::vec(-5.0f64..5.0, 2..5), p in 1u64..40) {
            let f = VinogradovPolynomial::new(c).unwrap();
            prop_assert!(weyl_sum(p, &f).norm() <= p as f64 + 1e-9);
        }
    }
}
