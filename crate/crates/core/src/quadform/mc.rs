//! Monte Carlo sampling of `|Y - a|^2` and kernel density estimates.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::inversion::Cgf;
use super::spec::{HilbertGaussianSpec, Spectrum};
use crate::error::{invalid, Result};
use crate::estimate::{RealAccumulator, RealEstimate};
use crate::seed::{chunked, Rng};

/// Fewest draws accepted by the Monte Carlo routines.
pub const MIN_SAMPLES: usize = 100;

/// One draw of `sum_j (Y_j - a_j)^2`, with the merged remainder added as its mean.
pub fn draw(sp: &Spectrum, r: &mut Rng) -> f64 {
    let sd = sp.s1.sqrt();
    let mut z: f64 = r.sample(StandardNormal);
    let mut x = (sd * z - sp.lambda.sqrt()).powi(2);
    for _ in 1..sp.k {
        z = r.sample(StandardNormal);
        x += sp.s1 * z * z;
    }
    for &(v, a2) in &sp.tail {
        z = r.sample(StandardNormal);
        x += (v.sqrt() * z - a2.sqrt()).powi(2);
    }
    x + sp.shift
}

pub fn sample(spec: &HilbertGaussianSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let sp = spec.spectrum();
    Ok(crate::seed::sample_vec(n, seed, |r| draw(&sp, r)))
}

/// Silverman's rule `1.06 sd n^{-1/5}`.
pub fn silverman(cgf: &Cgf, n: usize) -> f64 {
    1.06 * cgf.variance().sqrt() * (n.max(1) as f64).powf(-0.2)
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return invalid(format!("need at least {MIN_SAMPLES} samples, got {n}"));
    }
    Ok(())
}

/// Gaussian-kernel density estimates at each point of `us`, with standard
/// errors from the spread of the kernel values.
pub fn kde(sp: &Spectrum, us: &[f64], h: f64, n: usize, seed: u64) -> Result<Vec<RealEstimate>> {
    check_n(n)?;
    if !(h > 0.0) {
        return invalid("bandwidth must be positive");
    }
    let norm = 1.0 / (h * (2.0 * PI).sqrt());
    let parts = chunked(n, seed, |r, len| {
        let mut acc = vec![RealAccumulator::default(); us.len()];
        for _ in 0..len {
            let x = draw(sp, r);
            for (a, &u) in acc.iter_mut().zip(us) {
                let z = (u - x) / h;
                a.push(norm * (-0.5 * z * z).exp());
            }
        }
        acc
    });
    let mut total = vec![RealAccumulator::default(); us.len()];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    Ok(total.iter().map(RealAccumulator::finish).collect())
}

/// Proportion of draws above `v`.
pub fn exceedance(sp: &Spectrum, v: f64, n: usize, seed: u64) -> Result<RealEstimate> {
    check_n(n)?;
    let hits: u64 = chunked(n, seed, |r, len| (0..len).filter(|_| draw(sp, r) > v).count() as u64).iter().sum();
    let p = hits as f64 / n as f64;
    Ok(RealEstimate { value: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), n_samples: n })
}
