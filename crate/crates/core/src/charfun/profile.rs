//! Averaged characteristic-function profiles `phi_X(T) = int_{-T}^{T} |g_X|`
//! and the growth condition `phi_X(bt) <= b^eps phi(t)`.

use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::{invalid, Error, Result};
use crate::quad::integrate;
use crate::report::{EnvelopePoint, EnvelopeReport};

/// Relative slack when comparing profile values against a model.
pub const PROFILE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedCfProfile {
    /// Increasing grid of `T > 0`.
    pub t_grid: Vec<f64>,
    pub phi: Vec<f64>,
    /// Accumulated quadrature error estimate at the last grid point.
    pub abs_error: f64,
}

impl AveragedCfProfile {
    /// Conservative value at `x`: the profile at the smallest grid point
    /// `>= x`, or `None` beyond the grid.
    pub fn upper_at(&self, x: f64) -> Option<f64> {
        let i = self.t_grid.partition_point(|&t| t < x * (1.0 - 1e-12));
        self.phi.get(i).copied()
    }

    /// Smallest `C` with `phi_X(T) <= C T^eps` on the grid points `T >= 1`.
    pub fn power_constant(&self, eps: f64) -> f64 {
        self.t_grid
            .iter()
            .zip(&self.phi)
            .filter(|(t, _)| **t >= 1.0)
            .map(|(t, p)| p / t.powf(eps))
            .fold(0.0, f64::max)
    }
}

/// Integrates `|g_X|` over `[-T, T]` for each `T` of `t_grid`, using the exact
/// characteristic function of `dist`.
pub fn phi_profile(dist: &Distribution, t_grid: &[f64], quad_tol: f64) -> Result<AveragedCfProfile> {
    dist.validate()?;
    if dist.exact_cf(0.0).is_none() {
        return Err(Error::InvalidArgument(
            "phi profile needs a law with an exact characteristic function".into(),
        ));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("T grid must be positive and strictly increasing");
    }
    let g = |t: f64| dist.exact_cf(t).expect("checked above").norm();
    let mut phi = Vec::with_capacity(t_grid.len());
    let mut acc = 0.0;
    let mut err = 0.0;
    let mut lo = 0.0;
    for &hi in t_grid {
        // unit pieces keep oscillatory integrands well resolved
        let mut a = lo;
        while a < hi {
            let b = (a + 1.0).min(hi);
            let r = integrate(g, a, b, quad_tol * 1e-2, quad_tol, 200);
            acc += 2.0 * r.value;
            err += 2.0 * r.abs_error;
            a = b;
        }
        phi.push(acc);
        lo = hi;
    }
    Ok(AveragedCfProfile { t_grid: t_grid.to_vec(), phi, abs_error: err })
}

/// Checks `phi_X(bt) <= b^eps phi(t)` for every `(b, t)` pair.
///
/// Abscissae in the report are the pair index in row-major `(b, t)` order.
/// Pairs with `bt` beyond the profile grid are inconclusive.
pub fn condition5_check(
    profile: &AveragedCfProfile,
    model: &dyn Fn(f64) -> f64,
    eps: f64,
    b_grid: &[f64],
    t_grid: &[f64],
) -> Result<EnvelopeReport> {
    if !(eps >= 0.0) {
        return invalid("eps must be nonnegative");
    }
    if b_grid.iter().chain(t_grid).any(|v| !(*v >= 1.0)) {
        return invalid("b and t grids must lie in [1, inf)");
    }
    let mut points = Vec::new();
    for &b in b_grid {
        for &t in t_grid {
            let idx = points.len() as f64;
            let bound = b.powf(eps) * model(t);
            match profile.upper_at(b * t) {
                Some(v) => {
                    let mut p = EnvelopePoint::checked(idx, v, None, Some(bound));
                    p.pass = v <= bound * (1.0 + PROFILE_RTOL);
                    points.push(p)
                }
                None => points.push(EnvelopePoint::inconclusive(idx, f64::NAN, None, Some(bound))),
            }
        }
    }
    Ok(EnvelopeReport::new("condition5", points).with_extra("eps", eps))
}
