//! The stochastic mean value
//! `I_k(P) = P^{-m(m-1)/2} int_box |E exp{2 pi i f(S)} 1{-P < S <= P}|^{2k} d alpha`
//! over the box `|alpha_j| <= P^{j-1}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{invalid, Result};
use crate::estimate::RealAccumulator;
use crate::quad::gauss_panels;
use crate::seed::{chunked, sample_vec, sub_seed, Rng, CHUNK};

/// Panel cap for the inner oscillatory integral of uniform laws.
pub const MAX_PANELS: usize = 1 << 22;

/// The coefficient domain `prod_j [-P^{j-1}, P^{j-1}]` with its normalizing
/// prefactor `P^{-m(m-1)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientBox {
    pub m: u32,
    pub p: f64,
}

impl CoefficientBox {
    pub fn new(m: u32, p: f64) -> Result<Self> {
        if m < 2 || !(p >= 1.0) {
            return invalid("need m >= 2 and P >= 1");
        }
        Ok(CoefficientBox { m, p })
    }

    /// Half-width of the range of `alpha_j`, `j = 1..=m`.
    pub fn half_width(&self, j: u32) -> f64 {
        self.p.powi(j as i32 - 1)
    }

    fn half_m2(&self) -> f64 {
        (self.m * (self.m - 1)) as f64 / 2.0
    }

    pub fn ln_volume(&self) -> f64 {
        self.m as f64 * 2f64.ln() + self.half_m2() * self.p.ln()
    }

    pub fn ln_prefactor(&self) -> f64 {
        -self.half_m2() * self.p.ln()
    }

    pub fn volume(&self) -> f64 {
        self.ln_volume().exp()
    }

    pub fn prefactor(&self) -> f64 {
        self.ln_prefactor().exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSampling {
    /// Stratified for atom laws, importance sampling otherwise.
    #[default]
    Auto,
    /// Uniform over the box, one stratum per sign orthant.
    Stratified,
    /// Truncated Cauchy in the scaled coordinates `alpha_j R^j`.
    Importance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkOptions {
    pub n_mc: usize,
    pub seed: u64,
    /// Size of the common inner sample for laws without exact structure.
    pub n_inner: usize,
    pub sampling: AlphaSampling,
    /// Scale `R` for importance sampling; chosen from the law when absent.
    pub scale: Option<f64>,
    /// Relative standard error the caller asks for; unmet targets are flagged.
    pub target_rel_se: Option<f64>,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions { n_mc: 20_000, seed: 0, n_inner: 4096, sampling: AlphaSampling::Auto, scale: None, target_rel_se: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValueEstimate {
    pub value: f64,
    pub std_error: f64,
    pub p: f64,
    pub m: u32,
    pub k: u32,
    pub n_mc: usize,
    pub inner: &'static str,
    pub sampling: &'static str,
    /// Split-sample bias estimate of the plug-in inner average, if one was used.
    pub bias_diagnostic: Option<f64>,
    /// Draws whose inner integral hit the panel cap.
    pub truncated_draws: usize,
    pub flag: Option<String>,
}

impl MeanValueEstimate {
    pub fn rel_se(&self) -> f64 {
        if self.value > 0.0 {
            self.std_error / self.value
        } else {
            f64::INFINITY
        }
    }
}

/// How `E exp{2 pi i f(S)} 1{-P < S <= P}` is evaluated.
enum Inner {
    Atoms(Vec<(f64, f64)>),
    Uniform { lo: f64, hi: f64, density: f64 },
    Sample { values: Vec<f64>, n_total: usize },
}

fn eval_poly(alpha: &[f64], x: f64) -> f64 {
    x * alpha.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn cis(turns: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * turns).sin_cos();
    Complex64::new(c, s)
}

impl Inner {
    fn build(dist: &Distribution, p: f64, n_inner: usize, seed: u64) -> Result<Self> {
        dist.validate()?;
        let inside = |x: f64| -p < x && x <= p;
        if let Some(atoms) = dist.atoms() {
            return Ok(Inner::Atoms(atoms.into_iter().filter(|(x, _)| inside(*x)).collect()));
        }
        if let Distribution::Uniform { lo, hi } = *dist {
            return Ok(Inner::Uniform { lo: lo.max(-p), hi: hi.min(p), density: 1.0 / (hi - lo) });
        }
        if n_inner < 2 {
            return invalid("inner sample needs at least 2 draws");
        }
        let values: Vec<f64> = sample_vec(n_inner, seed, |r| dist.sample(r)).into_iter().filter(|x| inside(*x)).collect();
        Ok(Inner::Sample { values, n_total: n_inner })
    }

    fn label(&self) -> &'static str {
        match self {
            Inner::Atoms(_) => "exact-atoms",
            Inner::Uniform { .. } => "uniform-quadrature",
            Inner::Sample { .. } => "common-sample",
        }
    }

    /// Returns the expectation and whether the panel cap was hit.
    fn eval(&self, alpha: &[f64]) -> (Complex64, bool) {
        match self {
            Inner::Atoms(a) => (a.iter().map(|(x, w)| cis(eval_poly(alpha, *x)) * w).sum(), false),
            Inner::Uniform { lo, hi, density } => {
                if lo >= hi {
                    return (Complex64::new(0.0, 0.0), false);
                }
                let r = lo.abs().max(hi.abs());
                let deriv: f64 = alpha.iter().enumerate().map(|(j, c)| (j + 1) as f64 * c.abs() * r.powi(j as i32)).sum();
                let cycles = (hi - lo) * deriv;
                let wanted = (2.0 * cycles).ceil() as usize + 2;
                let panels = wanted.min(MAX_PANELS);
                let v: Complex64 = gauss_panels(|x| cis(eval_poly(alpha, x)), *lo, *hi, panels);
                (v * *density, wanted > MAX_PANELS)
            }
            Inner::Sample { values, n_total } => {
                let s: Complex64 = values.iter().map(|&x| cis(eval_poly(alpha, x))).sum();
                (s / *n_total as f64, false)
            }
        }
    }

    /// Half-sample expectations for the bias diagnostic.
    fn eval_halves(&self, alpha: &[f64]) -> Option<(Complex64, Complex64)> {
        let Inner::Sample { values, n_total } = self else { return None };
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        // the inner sample is filtered, so split by parity of position
        for (i, &x) in values.iter().enumerate() {
            if i % 2 == 0 {
                a += cis(eval_poly(alpha, x));
            } else {
                b += cis(eval_poly(alpha, x));
            }
        }
        let half = *n_total as f64 / 2.0;
        Some((a / half, b / half))
    }

    fn natural_scale(&self, p: f64) -> f64 {
        let r = match self {
            Inner::Atoms(a) => a.iter().fold(0.0f64, |m, (x, _)| m.max(x.abs())),
            Inner::Uniform { lo, hi, .. } => lo.abs().max(hi.abs()),
            Inner::Sample { values, .. } => {
                let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
                v.sort_by(f64::total_cmp);
                v.get(((v.len() as f64) * 0.99) as usize).or(v.last()).copied().unwrap_or(1.0)
            }
        };
        r.clamp(1e-3, p)
    }
}

#[derive(Default, Clone, Copy)]
struct Acc {
    full: RealAccumulator,
    half_a: RealAccumulator,
    half_b: RealAccumulator,
    truncated: usize,
}

impl Acc {
    fn merge(mut self, o: &Acc) -> Acc {
        self.full = self.full.merge(&o.full);
        self.half_a = self.half_a.merge(&o.half_a);
        self.half_b = self.half_b.merge(&o.half_b);
        self.truncated += o.truncated;
        self
    }
}

fn power_k(z: Complex64, k: u32) -> f64 {
    z.norm_sqr().powi(k as i32)
}

/// Monte Carlo estimate of `I_k(P)` for the law `dist`.
pub fn ik_estimate(dist: &Distribution, p: f64, m: u32, k: u32, opts: &IkOptions) -> Result<MeanValueEstimate> {
    let bx = CoefficientBox::new(m, p)?;
    if k < 1 {
        return invalid("k must be at least 1");
    }
    let strata = 1usize << m;
    if opts.n_mc < 2 * strata {
        return invalid(format!("n_mc must be at least {}", 2 * strata));
    }
    if m > 12 {
        return invalid("m above 12 is not supported");
    }
    let inner = Inner::build(dist, p, opts.n_inner, sub_seed(opts.seed, &[1]))?;
    let sampling = match opts.sampling {
        AlphaSampling::Auto => match inner {
            Inner::Atoms(_) => AlphaSampling::Stratified,
            _ => AlphaSampling::Importance,
        },
        s => s,
    };
    let alpha_seed = sub_seed(opts.seed, &[2]);
    let mut est = match sampling {
        AlphaSampling::Stratified => stratified(&inner, &bx, k, opts.n_mc, alpha_seed),
        _ => {
            let r = opts.scale.unwrap_or_else(|| inner.natural_scale(p));
            if !(r > 0.0) {
                return invalid("importance scale must be positive");
            }
            importance(&inner, &bx, k, r, opts.n_mc, alpha_seed)
        }
    };
    est.inner = inner.label();
    est.k = k;
    if let Some(target) = opts.target_rel_se {
        if est.rel_se() > target {
            est.flag = Some(format!("relative standard error {:.3} exceeds target {target}", est.rel_se()));
        }
    }
    if est.truncated_draws > 0 && est.flag.is_none() {
        est.flag = Some(format!("{} draws hit the panel cap", est.truncated_draws));
    }
    Ok(est)
}

fn blank(bx: &CoefficientBox, n_mc: usize, sampling: &'static str) -> MeanValueEstimate {
    MeanValueEstimate {
        value: 0.0,
        std_error: 0.0,
        p: bx.p,
        m: bx.m,
        k: 0,
        n_mc,
        inner: "",
        sampling,
        bias_diagnostic: None,
        truncated_draws: 0,
        flag: None,
    }
}

fn stratified(inner: &Inner, bx: &CoefficientBox, k: u32, n_mc: usize, seed: u64) -> MeanValueEstimate {
    let m = bx.m as usize;
    let strata = 1usize << m;
    debug_assert_eq!(CHUNK % strata, 0);
    let parts = chunked(n_mc, seed, |r: &mut Rng, len| {
        let mut accs = vec![Acc::default(); strata];
        let mut alpha = vec![0.0; m];
        for i in 0..len {
            let s = i % strata;
            for (j, a) in alpha.iter_mut().enumerate() {
                let u: f64 = r.random();
                let sign = if s >> j & 1 == 1 { -1.0 } else { 1.0 };
                *a = sign * u * bx.half_width(j as u32 + 1);
            }
            record(inner, &alpha, k, 1.0, &mut accs[s]);
        }
        accs
    });
    let per: Vec<Acc> = (0..strata)
        .map(|s| parts.iter().fold(Acc::default(), |a, c| a.merge(&c[s])))
        .collect();
    // prefactor * volume = 2^m
    let scale = (bx.m as f64 * 2f64.ln()).exp();
    let combine = |pick: fn(&Acc) -> &RealAccumulator| {
        let mut mean = 0.0;
        let mut var = 0.0;
        for a in &per {
            let e = pick(a).finish();
            mean += e.value / strata as f64;
            var += (e.std_error / strata as f64).powi(2);
        }
        (mean * scale, var.sqrt() * scale)
    };
    let (value, se) = combine(|a| &a.full);
    let mut est = blank(bx, n_mc, "stratified-uniform");
    est.value = value;
    est.std_error = se;
    est.truncated_draws = per.iter().map(|a| a.truncated).sum();
    if matches!(inner, Inner::Sample { .. }) {
        let (a, _) = combine(|a| &a.half_a);
        let (b, _) = combine(|a| &a.half_b);
        est.bias_diagnostic = Some(0.5 * (a + b) - value);
    }
    est
}

fn record(inner: &Inner, alpha: &[f64], k: u32, weight: f64, acc: &mut Acc) {
    let (z, trunc) = inner.eval(alpha);
    acc.full.push(weight * power_k(z, k));
    acc.truncated += trunc as usize;
    if let Some((a, b)) = inner.eval_halves(alpha) {
        acc.half_a.push(weight * power_k(a, k));
        acc.half_b.push(weight * power_k(b, k));
    }
}

fn importance(inner: &Inner, bx: &CoefficientBox, k: u32, r: f64, n_mc: usize, seed: u64) -> MeanValueEstimate {
    let m = bx.m as usize;
    // beta_j = alpha_j R^j ranges over [-B_j, B_j]
    let atan_b: Vec<f64> = (1..=bx.m).map(|j| (bx.half_width(j) * r.powi(j as i32)).atan()).collect();
    let parts = chunked(n_mc, seed, |rng: &mut Rng, len| {
        let mut acc = Acc::default();
        let mut alpha = vec![0.0; m];
        for _ in 0..len {
            let mut inv_q = 1.0;
            for (j, a) in alpha.iter_mut().enumerate() {
                let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
                let beta = (u * atan_b[j]).tan();
                *a = beta / r.powi(j as i32 + 1);
                inv_q *= 2.0 * atan_b[j] * (1.0 + beta * beta);
            }
            record(inner, &alpha, k, inv_q, &mut acc);
        }
        acc
    });
    let acc = parts.iter().fold(Acc::default(), |a, c| a.merge(c));
    // I = P^{-m(m-1)/2} R^{-m(m+1)/2} E[h / q_beta]
    let ln_scale = bx.ln_prefactor() - (bx.m * (bx.m + 1)) as f64 / 2.0 * r.ln();
    let scale = ln_scale.exp();
    let e = acc.full.finish();
    let mut est = blank(bx, n_mc, "importance-cauchy");
    est.value = e.value * scale;
    est.std_error = e.std_error * scale;
    est.truncated_draws = acc.truncated;
    if matches!(inner, Inner::Sample { .. }) {
        let a = acc.half_a.finish().value * scale;
        let b = acc.half_b.finish().value * scale;
        est.bias_diagnostic = Some(0.5 * (a + b) - est.value);
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n_mc: usize, seed: u64) -> IkOptions {
        IkOptions { n_mc, seed, ..IkOptions::default() }
    }

    #[test]
    fn box_identities() {
        for m in 2..6 {
            for p in [1.0, 2.5, 32.0] {
                let b = CoefficientBox::new(m, p).unwrap();
                let expect = 2f64.powi(m as i32) * p.powf((m * (m - 1)) as f64 / 2.0);
                assert!((b.volume() - expect).abs() <= 1e-9 * expect);
                assert!((b.volume() * b.prefactor() - 2f64.powi(m as i32)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn point_mass_gives_two_to_m() {
        let e = ik_estimate(&Distribution::PointMass { at: 1.0 }, 5.0, 3, 1, &opts(1000, 1)).unwrap();
        assert!((e.value - 8.0).abs() < 1e-9);
        assert!(e.std_error < 1e-9);
    }

    #[test]
    fn lattice_matches_remark3_statistically() {
        let e = ik_estimate(&Distribution::Lattice { lo: 1, hi: 3 }, 3.0, 3, 2, &opts(200_000, 2)).unwrap();
        let exact = 8.0 * 15.0 / 81.0;
        assert!((e.value - exact).abs() < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn outside_window_is_zero() {
        let e = ik_estimate(&Distribution::PointMass { at: 10.0 }, 3.0, 3, 1, &opts(1000, 3)).unwrap();
        assert_eq!(e.value, 0.0);
        let e = ik_estimate(&Distribution::Uniform { lo: 5.0, hi: 6.0 }, 3.0, 3, 1, &opts(1000, 3)).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn integer_shift_invariance() {
        // the unit-cell mean is preserved by the unimodular change of variables
        let a = ik_estimate(&Distribution::Lattice { lo: 1, hi: 3 }, 4.0, 3, 2, &opts(400_000, 4)).unwrap();
        let b = ik_estimate(&Distribution::Lattice { lo: 2, hi: 4 }, 4.0, 3, 2, &opts(400_000, 5)).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 3.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn sampling_schemes_agree_for_uniform() {
        let d = Distribution::Uniform { lo: -2.0, hi: 2.0 };
        let s = ik_estimate(&d, 2.0, 2, 2, &IkOptions { sampling: AlphaSampling::Stratified, ..opts(200_000, 6) }).unwrap();
        let i = ik_estimate(&d, 2.0, 2, 2, &IkOptions { sampling: AlphaSampling::Importance, ..opts(200_000, 7) }).unwrap();
        let se = (s.std_error.powi(2) + i.std_error.powi(2)).sqrt();
        assert!((s.value - i.value).abs() < 4.0 * se, "{s:?} {i:?}");
    }

    #[test]
    fn common_sample_reports_bias() {
        let e = ik_estimate(&Distribution::standard_normal(), 4.0, 2, 1, &IkOptions { n_inner: 512, ..opts(5000, 8) }).unwrap();
        assert_eq!(e.inner, "common-sample");
        assert!(e.bias_diagnostic.is_some());
        assert!(e.value <= 4.0 + 3.0 * e.std_error);
    }

    #[test]
    fn too_few_draws_rejected() {
        assert!(ik_estimate(&Distribution::cantor(), 2.0, 3, 1, &opts(10, 0)).is_err());
    }
}
