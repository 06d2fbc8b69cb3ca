//! Density and survival function of `|Y - a|^2` by numerical inversion of the
//! Laplace transform along a tilted ray through the saddle point.
//!
//! With `K` the cumulant generating function and `tau` real below the first
//! pole, `p(u) = (2 pi i)^{-1} int e^{K(z) - z u} dz` over `Re z = tau`. The
//! upper half of that line is rotated to `z(s) = tau + i s e^{-i theta}`,
//! which adds exponential decay `e^{-u s sin theta}` without crossing the
//! singularities on `(1/(2 sigma_1^2), inf)`. Everything is scaled by
//! `e^{K(tau) - tau u}` so that values far below `f64::MIN_POSITIVE` are
//! returned through their logarithm.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spec::{HilbertGaussianSpec, Spectrum};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_pieces};

const THETA: f64 = PI / 8.0;

/// Cumulant generating function of `sum_j (Y_j - a_j)^2`.
#[derive(Debug, Clone)]
pub struct Cgf {
    k: f64,
    s1: f64,
    lambda: f64,
    tail: Vec<(f64, f64)>,
    shift: f64,
}

impl Cgf {
    pub fn new(sp: &Spectrum) -> Self {
        Cgf { k: sp.k as f64, s1: sp.s1, lambda: sp.lambda, tail: sp.tail.clone(), shift: sp.shift }
    }

    pub fn from_spec(spec: &HilbertGaussianSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self::new(&spec.spectrum()))
    }

    /// First singularity `1 / (2 sigma_1^2)`.
    pub fn pole(&self) -> f64 {
        0.5 / self.s1
    }

    /// Lower end of the support.
    pub fn floor(&self) -> f64 {
        self.shift + self.tail.iter().filter(|(v, _)| *v == 0.0).map(|(_, a2)| a2).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.k * self.s1 + self.lambda + self.tail.iter().map(|(v, a2)| v + a2).sum::<f64>() + self.shift
    }

    pub fn variance(&self) -> f64 {
        self.derivs(0.0).1
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        // (multiplicity, variance, squared shift)
        std::iter::once((self.k, self.s1, self.lambda)).chain(self.tail.iter().map(|&(v, a2)| (1.0, v, a2)))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.terms()
            .map(|(m, v, a2)| {
                let d = 1.0 - 2.0 * t * v;
                -0.5 * m * d.ln() + a2 * t / d
            })
            .sum::<f64>()
            + self.shift * t
    }

    /// `(K'(t), K''(t))`.
    pub fn derivs(&self, t: f64) -> (f64, f64) {
        let mut d1 = self.shift;
        let mut d2 = 0.0;
        for (m, v, a2) in self.terms() {
            let d = 1.0 - 2.0 * t * v;
            d1 += m * v / d + a2 / (d * d);
            d2 += 2.0 * m * v * v / (d * d) + 4.0 * a2 * v / (d * d * d);
        }
        (d1, d2)
    }

    /// `K(z)` on the principal branch; valid off the real half-line right of the pole.
    pub fn complex(&self, z: Complex64) -> Complex64 {
        let mut acc = z * self.shift;
        for (m, v, a2) in self.terms() {
            let d = Complex64::new(1.0, 0.0) - z * (2.0 * v);
            acc += -0.5 * m * d.ln() + z * a2 / d;
        }
        acc
    }

    /// Root of `K'(tau) = u`; requires `u` above the support floor.
    pub fn saddle(&self, u: f64) -> Result<f64> {
        if !(u > self.floor()) || !u.is_finite() {
            return invalid(format!("saddle point needs u above the support floor, got {u}"));
        }
        let k1 = |t: f64| self.derivs(t).0;
        let mut lo = -self.pole();
        let mut n = 0;
        while k1(lo) >= u {
            lo *= 2.0;
            n += 1;
            if n > 2000 || !lo.is_finite() {
                return Err(Error::NotConverged(format!("no lower saddle bracket for u={u}")));
            }
        }
        let mut hi = 0.0f64.max(lo);
        let mut gap = 1.0;
        while k1(hi) <= u {
            gap *= 0.5;
            hi = self.pole() * (1.0 - gap);
            if gap < 1e-300 {
                return Err(Error::NotConverged(format!("no upper saddle bracket for u={u}")));
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..400 {
            let (d1, d2) = self.derivs(t);
            if (d1 - u).abs() <= 1e-13 * u {
                break;
            }
            if d1 > u {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - (d1 - u) / d2;
            t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * hi.abs().max(lo.abs()) {
                break;
            }
        }
        Ok(t)
    }
}

/// A contour integral result in log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inverted {
    pub ln_value: f64,
    /// Relative error estimate.
    pub rel_error: f64,
    pub converged: bool,
}

impl Inverted {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

fn direction() -> Complex64 {
    // i e^{-i theta}
    Complex64::new(THETA.sin(), THETA.cos())
}

/// `e^{-i theta} int_0^inf g(s) ds` where `g(s) = e^{K(z) - K(tau) - (z - tau) u} w(z)`.
fn ray_integral(cgf: &Cgf, tau: f64, u: f64, weight: impl Fn(Complex64) -> Complex64, rel_tol: f64) -> (Complex64, f64, bool) {
    let dir = direction();
    let k_tau = cgf.value(tau);
    let g = |s: f64| {
        let z = Complex64::new(tau, 0.0) + dir * s;
        let e = cgf.complex(z) - k_tau - dir * s * u;
        e.exp() * weight(z)
    };
    let width = 1.0 / cgf.derivs(tau).1.sqrt();
    let scale = weight(Complex64::new(tau, 0.0)).norm().max(1e-300);
    let mut breaks = vec![0.0, 0.25 * width];
    let mut b = width;
    for _ in 0..400 {
        breaks.push(b);
        if g(b).norm() * b < 1e-18 * width * scale {
            break;
        }
        b *= 2.0;
    }
    let r = integrate_pieces(g, &breaks, 1e-16 * width * scale, rel_tol, 400);
    let rot = Complex64::new(THETA.cos(), -THETA.sin());
    (rot * r.value, r.abs_error, r.converged)
}

/// `ln p(u)` by inversion at the saddle point.
pub fn ln_density(cgf: &Cgf, u: f64, rel_tol: f64) -> Result<Inverted> {
    if !(u > cgf.floor()) {
        return Ok(Inverted { ln_value: f64::NEG_INFINITY, rel_error: 0.0, converged: true });
    }
    let tau = cgf.saddle(u)?;
    let (v, err, converged) = ray_integral(cgf, tau, u, |_| Complex64::new(1.0, 0.0), rel_tol);
    if !(v.re > 0.0) {
        return Err(Error::NotConverged(format!("density inversion lost positivity at u={u}")));
    }
    Ok(Inverted {
        ln_value: cgf.value(tau) - tau * u + (v.re / PI).ln(),
        rel_error: err / v.re,
        converged,
    })
}

/// `P(X > v)` by inversion, in log scale.
pub fn ln_survival(cgf: &Cgf, v: f64, rel_tol: f64) -> Result<Inverted> {
    if !(v > cgf.floor()) {
        return Ok(Inverted { ln_value: 0.0, rel_error: 0.0, converged: true });
    }
    let mut tau = cgf.saddle(v)?;
    // keep the pole of 1/z away from the path
    let min_gap = 1.0 / cgf.derivs(tau).1.sqrt();
    if tau.abs() < min_gap {
        tau = if tau >= 0.0 { min_gap.min(0.5 * cgf.pole()) } else { -min_gap };
    }
    let (val, err, converged) = ray_integral(cgf, tau, v, |z| z.inv(), rel_tol);
    let ln_scale = cgf.value(tau) - tau * v;
    if tau > 0.0 {
        if !(val.re > 0.0) {
            return Err(Error::NotConverged(format!("survival inversion lost positivity at v={v}")));
        }
        Ok(Inverted { ln_value: ln_scale + (val.re / PI).ln(), rel_error: err / val.re, converged })
    } else {
        let part = ln_scale.exp() * val.re / PI;
        let p = 1.0 + part;
        if !(p > 0.0) {
            return Err(Error::NotConverged(format!("survival inversion lost positivity at v={v}")));
        }
        Ok(Inverted { ln_value: p.ln(), rel_error: ln_scale.exp() * err / PI / p, converged })
    }
}

/// Chernoff bound `ln P(X > v) <= K(tau) - tau v` at the saddle point, for `v` above the mean.
pub fn ln_chernoff(cgf: &Cgf, v: f64) -> Result<f64> {
    if v <= cgf.mean() {
        return Ok(0.0);
    }
    let tau = cgf.saddle(v)?;
    Ok((cgf.value(tau) - tau * v).min(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    CfInversion,
    McKde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    /// Quadrature of the inverted density plus a Chernoff remainder.
    IntegrateP,
    /// Direct inversion of the survival function.
    Inversion,
    Mc,
}

/// Tuning shared by the density and tail routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionParams {
    pub rel_tol: f64,
    pub n_samples: usize,
    /// Kernel bandwidth; Silverman's rule when absent.
    pub bandwidth: Option<f64>,
}

impl Default for InversionParams {
    fn default() -> Self {
        InversionParams { rel_tol: 1e-11, n_samples: 1_000_000, bandwidth: None }
    }
}

/// A density or probability with an error bar.
///
/// For inversion `error` is a numerical error estimate; for Monte Carlo it is
/// one standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QfEstimate {
    pub value: f64,
    pub ln_value: f64,
    pub error: f64,
    pub converged: bool,
    pub n_samples: usize,
}

impl QfEstimate {
    fn from_inverted(r: Inverted) -> Self {
        let value = r.value();
        QfEstimate { value, ln_value: r.ln_value, error: r.rel_error * value, converged: r.converged, n_samples: 0 }
    }

    fn from_mc(value: f64, error: f64, n: usize) -> Self {
        QfEstimate { value, ln_value: value.ln(), error, converged: true, n_samples: n }
    }
}

pub fn density_p(spec: &HilbertGaussianSpec, u: f64, method: DensityMethod, params: &InversionParams, seed: u64) -> Result<QfEstimate> {
    if !(u > 0.0) {
        return invalid("density_p needs u > 0");
    }
    let cgf = Cgf::from_spec(spec)?;
    match method {
        DensityMethod::CfInversion => Ok(QfEstimate::from_inverted(ln_density(&cgf, u, params.rel_tol)?)),
        DensityMethod::McKde => {
            let sp = spec.spectrum();
            let h = params.bandwidth.unwrap_or_else(|| super::mc::silverman(&cgf, params.n_samples));
            let est = super::mc::kde(&sp, &[u], h, params.n_samples, seed)?;
            Ok(QfEstimate::from_mc(est[0].value, est[0].std_error, params.n_samples))
        }
    }
}

/// `P(|Y - a| > r)`.
pub fn tail_prob(spec: &HilbertGaussianSpec, r: f64, method: TailMethod, params: &InversionParams, seed: u64) -> Result<QfEstimate> {
    if !(r > 0.0) {
        return invalid("tail_prob needs r > 0");
    }
    let cgf = Cgf::from_spec(spec)?;
    let v = r * r;
    match method {
        TailMethod::Inversion => Ok(QfEstimate::from_inverted(ln_survival(&cgf, v, params.rel_tol)?)),
        TailMethod::IntegrateP => integrate_tail(&cgf, v, params.rel_tol),
        TailMethod::Mc => {
            let est = super::mc::exceedance(&spec.spectrum(), v, params.n_samples, seed)?;
            Ok(QfEstimate::from_mc(est.value, est.std_error, params.n_samples))
        }
    }
}

/// Quadrature of the density over `[v, U]` in units of a reference density,
/// with `U` pushed out until the Chernoff bound on `P(X > U)` is negligible.
fn integrate_tail(cgf: &Cgf, v: f64, rel_tol: f64) -> Result<QfEstimate> {
    if !(v > cgf.floor()) {
        return Ok(QfEstimate { value: 1.0, ln_value: 0.0, error: 0.0, converged: true, n_samples: 0 });
    }
    let inner_tol = (rel_tol * 1e-2).max(1e-13);
    let reference = ln_survival(cgf, v, inner_tol)?.ln_value;
    let mean = cgf.mean();
    let sd = cgf.variance().sqrt();
    let mut upper = (2.0 * v).max(mean + 10.0 * sd);
    let target = reference + (rel_tol * 1e-2).ln();
    let mut ln_rem = ln_chernoff(cgf, upper)?;
    let mut n = 0;
    while ln_rem > target {
        upper = v + 2.0 * (upper - v);
        ln_rem = ln_chernoff(cgf, upper)?;
        n += 1;
        if n > 200 {
            return Err(Error::NotConverged(format!("no tail cutoff with negligible remainder for v={v}")));
        }
    }
    let ln_p_v = ln_density(cgf, v, inner_tol)?.ln_value;
    let ln_p_mid = if v < mean { ln_density(cgf, mean, inner_tol)?.ln_value } else { f64::NEG_INFINITY };
    let base = ln_p_v.max(ln_p_mid);
    let mut breaks = vec![v];
    let mut step = cgf.s1;
    while v + step < upper {
        breaks.push(v + step);
        step *= 2.0;
    }
    breaks.push(upper);
    let failure = std::cell::Cell::new(None::<Error>);
    let worst = std::cell::Cell::new(0.0f64);
    let f = |u: f64| match ln_density(cgf, u, inner_tol) {
        Ok(r) => {
            worst.set(worst.get().max(r.rel_error));
            (r.ln_value - base).exp()
        }
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let q = integrate_pieces(f, &breaks, 0.0, rel_tol, 500);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let rem = (ln_rem - base).exp();
    let total = q.value + rem;
    let ln_value = base + total.ln();
    let rel_error = (q.abs_error + rem + worst.get() * q.value) / total;
    let value = ln_value.exp();
    Ok(QfEstimate { value, ln_value, error: rel_error * value, converged: q.converged, n_samples: 0 })
}

/// `int p(u - h z) phi(z) dz`: the inverted density convolved with the
/// Gaussian kernel, which is what a kernel density estimate targets.
pub fn smoothed_density(cgf: &Cgf, u: f64, h: f64, rel_tol: f64) -> Result<f64> {
    if !(h > 0.0) {
        return invalid("bandwidth must be positive");
    }
    let floor = cgf.floor();
    let failure = std::cell::Cell::new(None::<Error>);
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let f = |z: f64| {
        let x = u - h * z;
        if x <= floor {
            return 0.0;
        }
        match ln_density(cgf, x, rel_tol) {
            Ok(r) => r.value() * phi(z),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let cut = (u - floor) / h;
    let hi = cut.min(8.0);
    let r = if hi <= -8.0 { return Ok(0.0) } else { integrate(f, -8.0, hi, 1e-15, 1e-10, 500) };
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(r.value)
}
