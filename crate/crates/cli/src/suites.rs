//! Per-suite parameter blocks, runners and cost models.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use polyrand::characterization::{
    classify, counterexample_sampler, cp_distance, stability_experiment, StabilityMetric, SymmetricQuadraticForm,
    DEFAULT_DEPTH,
};
use polyrand::charfun::{cantor_scan, cramer_bound, truncation_index};
use polyrand::quadform::verify::theorem16_threshold;
use polyrand::quadform::{
    density_p, tilt_weight, verify_theorem15, verify_theorem16, DensityMethod, HilbertGaussianSpec, InversionParams,
    SandwichOptions, TailMethod,
};
use polyrand::vinogradov::{
    count_cost, ik_estimate, jk_count, remark3_check, verify_theorem10, verify_theorem7, verify_theorem8,
    verify_theorem9, weyl_sum, CountMethod, IkOptions,
};
use polyrand::{Distribution, EnvelopePoint, EnvelopeReport, VinogradovPolynomial};

use crate::{CliError, CostEstimate, Suite};

/// Nominal throughput used to turn operation counts into seconds.
pub const OPS_PER_SECOND: f64 = 1e8;
/// Work above which a run is refused.
pub const MAX_OPERATIONS: f64 = 1e13;

/// Result of one suite: the report plus an optional headline for stdout.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: EnvelopeReport,
    pub headline: Option<String>,
}

impl Outcome {
    fn report(report: EnvelopeReport) -> Self {
        Outcome { report, headline: None }
    }
}

fn parse<T: DeserializeOwned + Default>(params: &Value) -> Result<T, CliError> {
    if params.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(params.clone()).map_err(|e| CliError::Config(format!("invalid params: {e}")))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn cost(suite: Suite, operations: f64, memory_bytes: f64, detail: impl Into<String>) -> CostEstimate {
    CostEstimate {
        suite,
        operations,
        memory_bytes,
        seconds: operations / OPS_PER_SECOND,
        feasible: operations.is_finite() && operations <= MAX_OPERATIONS,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- cantor-scan

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CantorScanParams {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    /// Truncation tolerance of the infinite product.
    pub tol: f64,
    /// Upper bound on `|L(t)|`; `e^{-0.027}` when absent.
    pub upper: Option<f64>,
}

impl Default for CantorScanParams {
    fn default() -> Self {
        CantorScanParams { t_min: 8.5, t_max: 2000.0, step: 0.01, tol: 1e-10, upper: None }
    }
}

fn cantor(p: &CantorScanParams) -> Result<Outcome, CliError> {
    let upper = p.upper.unwrap_or_else(cramer_bound);
    Ok(Outcome::report(cantor_scan(p.t_min, p.t_max, p.step, p.tol, upper)?))
}

fn cantor_cost(p: &CantorScanParams) -> CostEstimate {
    let n = if p.step > 0.0 { ((p.t_max - p.t_min) / p.step).max(0.0) + 1.0 } else { f64::INFINITY };
    let factors = truncation_index(p.t_min.abs().max(p.t_max.abs()), p.tol.max(1e-300)) as f64;
    cost(Suite::CantorScan, n * factors, n * 48.0, format!("{n:.0} grid points x {factors:.0} cosine factors"))
}

// ----------------------------------------------------------------------- weyl

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylParams {
    /// `a_1, ..., a_m` of `f(x) = a_m x^m + ... + a_1 x`.
    pub coeffs: Vec<f64>,
    pub p_grid: Vec<u64>,
}

impl Default for WeylParams {
    fn default() -> Self {
        WeylParams { coeffs: vec![0.0, std::f64::consts::SQRT_2], p_grid: vec![10, 30, 100, 300, 1000, 3000, 10000] }
    }
}

fn weyl(p: &WeylParams) -> Result<Outcome, CliError> {
    let f = VinogradovPolynomial::new(p.coeffs.clone())?;
    if p.p_grid.is_empty() || p.p_grid.contains(&0) {
        return Err(CliError::Config("p_grid must be non-empty with P >= 1".into()));
    }
    let points = p
        .p_grid
        .iter()
        .map(|&n| EnvelopePoint::checked(n as f64, weyl_sum(n, &f).norm() / n as f64, Some(0.0), Some(1.0 + 1e-12)))
        .collect();
    let rep = EnvelopeReport::new("weyl", points).with_extra("degree", f.degree() as f64);
    Ok(Outcome::report(rep))
}

fn weyl_cost(p: &WeylParams) -> CostEstimate {
    let ops: f64 = p.p_grid.iter().map(|&n| n as f64 * p.coeffs.len() as f64).sum();
    cost(Suite::Weyl, ops, 1024.0, "one pass over 1..=P per grid point")
}

// ------------------------------------------------------------------- jk-count

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JkCountParams {
    pub p: u64,
    pub m: u32,
    pub k: u32,
    pub method: CountMethod,
}

impl Default for JkCountParams {
    fn default() -> Self {
        JkCountParams { p: 3, m: 3, k: 2, method: CountMethod::SignatureHistogram }
    }
}

fn jk(p: &JkCountParams) -> Result<Outcome, CliError> {
    let c = jk_count(p.p, p.m, p.k, p.method)?;
    let lower = (p.p as f64).powi(p.k as i32);
    let point = EnvelopePoint::checked(p.p as f64, c.count as f64, Some(lower), Some(lower * lower));
    let rep = EnvelopeReport::new("jk-count", vec![point])
        .with_extra("m", p.m as f64)
        .with_extra("k", p.k as f64)
        .with_note(format!("J_k(P) = {}", c.count));
    Ok(Outcome { report: rep, headline: Some(c.count.to_string()) })
}

fn jk_cost(p: &JkCountParams) -> CostEstimate {
    let c = count_cost(p.p, p.m, p.k, p.method);
    let detail = match p.method {
        CountMethod::Enumerate => format!("P^(2k) = {:.3e} tuple pairs", c.operations),
        CountMethod::SignatureHistogram => format!("{:.3e} multiset signatures", c.operations / p.m.max(1) as f64),
    };
    let mut e = cost(Suite::JkCount, c.operations, c.memory_bytes, detail);
    e.feasible &= c.feasible;
    e
}

// ------------------------------------------------------------------------- ik

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkParams {
    /// Law of `S`; uniform on `[-P, P]` when absent.
    pub dist: Option<Distribution>,
    pub p: f64,
    pub m: u32,
    pub k: u32,
    /// Estimator options; the seed is taken from the run.
    pub options: IkOptions,
}

impl Default for IkParams {
    fn default() -> Self {
        IkParams { dist: None, p: 8.0, m: 3, k: 2, options: IkOptions::default() }
    }
}

fn ik(p: &IkParams, seed: u64) -> Result<Outcome, CliError> {
    let dist = p.dist.clone().unwrap_or(Distribution::Uniform { lo: -p.p, hi: p.p });
    let opts = IkOptions { seed, ..p.options };
    let est = ik_estimate(&dist, p.p, p.m, p.k, &opts)?;
    let trivial = 2f64.powi(p.m as i32);
    let point = EnvelopePoint::checked_within(p.p, est.value, Some(0.0), Some(trivial), 3.0 * est.std_error);
    let mut rep = EnvelopeReport::new("ik", vec![point])
        .with_extra("std_error", est.std_error)
        .with_extra("rel_se", est.rel_se())
        .with_extra("n_mc", est.n_mc as f64)
        .with_extra("truncated_draws", est.truncated_draws as f64)
        .with_note(format!("inner: {}, sampling: {}", est.inner, est.sampling));
    if let Some(b) = est.bias_diagnostic {
        rep = rep.with_extra("bias_diagnostic", b);
    }
    if let Some(f) = &est.flag {
        rep = rep.with_note(f.clone());
    }
    Ok(Outcome { headline: Some(format!("{} +- {}", est.value, est.std_error)), report: rep })
}

fn ik_ops(o: &IkOptions, p: f64, m: u32, k: u32) -> f64 {
    o.n_mc as f64 * (o.n_inner as f64 + p.abs().max(1.0)) * m as f64 * k.max(1) as f64
}

fn ik_cost(p: &IkParams) -> CostEstimate {
    let ops = ik_ops(&p.options, p.p, p.m, p.k);
    cost(Suite::Ik, ops, p.options.n_inner as f64 * 8.0 + 4096.0, format!("{} coefficient draws", p.options.n_mc))
}

// ---------------------------------------------------------- vinogradov-verify

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Theorem7,
    Theorem8,
    Theorem9,
    Theorem10,
    Remark3,
}

/// Law of `S` as a function of `P` for the ratio checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Continuous uniform on `[-P, P]`.
    Uniform,
    /// Uniform on `{1, ..., P}`.
    Lattice,
}

impl Family {
    fn law(self, p: f64) -> Distribution {
        match self {
            Family::Uniform => Distribution::Uniform { lo: -p, hi: p },
            Family::Lattice => Distribution::Lattice { lo: 1, hi: p.round().max(1.0) as i64 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub theorem: Theorem,
    pub m: u32,
    /// Theorems 7 and 8: `k = m tau`.
    pub tau: u32,
    /// Theorem 9: `k = b m`.
    pub b: u32,
    /// Theorem 10 and remark 3.
    pub k: u32,
    /// Theorem 9.
    pub p: f64,
    /// Integer grid for theorem 7 and remark 3.
    pub lattice_grid: Vec<u64>,
    /// Real grid for theorems 8 and 10.
    pub p_grid: Vec<f64>,
    pub family: Family,
    pub options: IkOptions,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            theorem: Theorem::Theorem7,
            m: 3,
            tau: 1,
            b: 2,
            k: 2,
            p: 32.0,
            lattice_grid: (2..=20).collect(),
            p_grid: vec![4.0, 8.0, 16.0],
            family: Family::Uniform,
            options: IkOptions { n_mc: 80_000, ..IkOptions::default() },
        }
    }
}

fn verify(p: &VerifyParams, seed: u64) -> Result<Outcome, CliError> {
    let opts = IkOptions { seed, ..p.options };
    let family = p.family;
    let law = move |x: f64| family.law(x);
    let rep = match p.theorem {
        Theorem::Theorem7 => verify_theorem7(&p.lattice_grid, p.m, p.tau)?,
        Theorem::Theorem8 => verify_theorem8(&law, &p.p_grid, p.m, p.tau, &opts)?,
        Theorem::Theorem10 => verify_theorem10(&law, &p.p_grid, p.m, p.k, &opts)?,
        Theorem::Theorem9 => verify_theorem9(p.p, p.m, p.b, &opts)?.0,
        Theorem::Remark3 => {
            if p.lattice_grid.is_empty() {
                return Err(CliError::Config("lattice_grid must be non-empty".into()));
            }
            let mut points = Vec::new();
            let mut notes = Vec::new();
            let mut ok = true;
            let mut extras = Vec::new();
            for &n in &p.lattice_grid {
                let r = remark3_check(n, p.m, p.k)?;
                ok &= r.all_pass();
                points.extend(r.points.iter().copied());
                notes.extend(r.notes.iter().map(|s| format!("P={n}: {s}")));
                for (key, v) in &r.extras {
                    extras.push((format!("{key}_{n:03}"), *v));
                }
            }
            let mut rep = EnvelopeReport::new("remark3", points);
            for (key, v) in extras {
                rep = rep.with_extra(&key, v);
            }
            for note in notes {
                rep = rep.with_note(note);
            }
            if !ok {
                rep.fail_overall();
            }
            rep
        }
    };
    Ok(Outcome::report(rep))
}

fn verify_cost(p: &VerifyParams) -> CostEstimate {
    let s = Suite::VinogradovVerify;
    match p.theorem {
        Theorem::Theorem7 => {
            let k = p.m * p.tau;
            let cs: Vec<_> = p.lattice_grid.iter().map(|&n| count_cost(n, p.m, k, CountMethod::SignatureHistogram)).collect();
            let mut e = cost(
                s,
                cs.iter().map(|c| c.operations).sum(),
                cs.iter().map(|c| c.memory_bytes).fold(0.0, f64::max),
                "signature histograms over the lattice grid",
            );
            e.feasible &= cs.iter().all(|c| c.feasible);
            e
        }
        Theorem::Theorem8 | Theorem::Theorem10 => {
            let k = if p.theorem == Theorem::Theorem8 { p.m * p.tau } else { p.k };
            let ops = p.p_grid.iter().map(|&x| ik_ops(&p.options, x, p.m, k)).sum();
            cost(s, ops, p.options.n_inner as f64 * 8.0, format!("{} I_k estimates", p.p_grid.len()))
        }
        Theorem::Theorem9 => {
            cost(s, ik_ops(&p.options, p.p, p.m, p.b * p.m), p.options.n_inner as f64 * 8.0, "one I_k estimate")
        }
        Theorem::Remark3 => {
            let ops = p
                .lattice_grid
                .iter()
                .map(|&n| {
                    let nodes: f64 = (1..=p.m).map(|j| (p.k as f64) * ((n as f64).powi(j as i32) - 1.0) + 1.0).product();
                    nodes * n as f64 * p.m as f64 * 2.0
                })
                .sum();
            cost(s, ops, 4096.0, "unit-cell rectangle rules")
        }
    }
}

// ------------------------------------------------------------ quadratic forms

fn default_spec() -> HilbertGaussianSpec {
    HilbertGaussianSpec {
        k: 4,
        head_variance: 1.0,
        head_shift: vec![],
        tail_variances: vec![0.25],
        tail_shift: vec![],
        geometric_ratio: Some(0.5),
        tail_shift_remainder: 0.0,
    }
}

fn qf_work(spec: &HilbertGaussianSpec) -> f64 {
    (spec.k + spec.spectrum().tail.len()) as f64
}

/// Integrand evaluations per inversion, a generous constant.
const INVERSION_EVALS: f64 = 2e4;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QfDensityParams {
    pub spec: HilbertGaussianSpec,
    pub u_grid: Vec<f64>,
    pub method: DensityMethod,
    pub inversion: InversionParams,
}

impl Default for QfDensityParams {
    fn default() -> Self {
        QfDensityParams {
            spec: default_spec(),
            u_grid: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            method: DensityMethod::CfInversion,
            inversion: InversionParams::default(),
        }
    }
}

fn qf_density(p: &QfDensityParams, seed: u64) -> Result<Outcome, CliError> {
    p.spec.validate()?;
    let mut points = Vec::with_capacity(p.u_grid.len());
    let mut lns = Vec::with_capacity(p.u_grid.len());
    for (i, &u) in p.u_grid.iter().enumerate() {
        let e = density_p(&p.spec, u, p.method, &p.inversion, polyrand::seed::sub_seed(seed, &[i as u64]))?;
        let mut pt = EnvelopePoint::checked(u, e.value, Some(0.0), None);
        pt.pass &= e.converged;
        points.push(pt);
        lns.push((i, e.ln_value, e.error));
    }
    let mut rep = EnvelopeReport::new("qf-density", points);
    for (i, ln, err) in lns {
        rep = rep.with_extra(&format!("ln_p_{i:03}"), ln).with_extra(&format!("error_{i:03}"), err);
    }
    Ok(Outcome::report(rep))
}

fn qf_density_cost(p: &QfDensityParams) -> CostEstimate {
    let w = qf_work(&p.spec);
    let n = p.u_grid.len() as f64;
    let (ops, mem) = match p.method {
        DensityMethod::CfInversion => (n * INVERSION_EVALS * w, 4096.0),
        DensityMethod::McKde => (p.inversion.n_samples as f64 * (w + n) * p.u_grid.len().max(1) as f64, 8.0 * 8192.0),
    };
    cost(Suite::QfDensity, ops, mem, format!("{} grid points", p.u_grid.len()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QfSandwichParams {
    pub spec: HilbertGaussianSpec,
    /// Explicit grid; otherwise `points` values spread over
    /// `[threshold, 5 threshold]`.
    pub u_grid: Option<Vec<f64>>,
    pub points: usize,
    pub options: SandwichOptions,
}

impl Default for QfSandwichParams {
    fn default() -> Self {
        QfSandwichParams { spec: default_spec(), u_grid: None, points: 9, options: SandwichOptions::default() }
    }
}

fn sandwich_grid(p: &QfSandwichParams) -> Result<Vec<f64>, CliError> {
    if let Some(g) = &p.u_grid {
        return Ok(g.clone());
    }
    let tf = tilt_weight(&p.spec, 1e-15)?;
    let base = tf.lower_threshold(p.spec.k, p.options.use_head_norm).unwrap_or(tf.u0);
    let base = if base > 0.0 { base } else { 1.0 };
    Ok(linspace(base, 5.0 * base, p.points))
}

fn qf_sandwich(p: &QfSandwichParams, seed: u64) -> Result<Outcome, CliError> {
    let grid = sandwich_grid(p)?;
    Ok(Outcome::report(verify_theorem15(&p.spec, &grid, &p.options, seed)?))
}

fn qf_sandwich_cost(p: &QfSandwichParams) -> CostEstimate {
    let w = qf_work(&p.spec);
    let n = p.u_grid.as_ref().map_or(p.points, Vec::len) as f64;
    let mc = p.options.mc_samples as f64 * (w + 4.0);
    cost(Suite::QfSandwich, n * INVERSION_EVALS * w + mc, 8.0 * 8192.0, format!("{n} inversions, {} MC draws", p.options.mc_samples))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QfTailParams {
    pub spec: HilbertGaussianSpec,
    /// Explicit radii; otherwise `points` values spread over
    /// `(r_0, 3 r_0]` above the admissibility radius `r_0`.
    pub r_grid: Option<Vec<f64>>,
    pub points: usize,
    pub options: SandwichOptions,
}

impl Default for QfTailParams {
    fn default() -> Self {
        QfTailParams {
            spec: HilbertGaussianSpec { head_shift: vec![1.0], ..default_spec() },
            r_grid: None,
            points: 9,
            options: SandwichOptions::default(),
        }
    }
}

/// Default radii for a tail run.
pub fn tail_grid(spec: &HilbertGaussianSpec, opts: &SandwichOptions, points: usize) -> Result<Vec<f64>, CliError> {
    let tf = tilt_weight(spec, 1e-15)?;
    let r0 = theorem16_threshold(spec, &tf, opts.use_head_norm)
        .ok_or_else(|| CliError::Config("the tail suite needs k >= 4 and a nonzero head shift".into()))?;
    Ok((1..=points).map(|i| r0 * (1.0 + 2.0 * i as f64 / points as f64)).collect())
}

fn qf_tail(p: &QfTailParams, seed: u64) -> Result<Outcome, CliError> {
    let grid = match &p.r_grid {
        Some(g) => g.clone(),
        None => tail_grid(&p.spec, &p.options, p.points)?,
    };
    Ok(Outcome::report(verify_theorem16(&p.spec, &grid, &p.options, seed)?))
}

fn qf_tail_cost(p: &QfTailParams) -> CostEstimate {
    let w = qf_work(&p.spec);
    let n = p.r_grid.as_ref().map_or(p.points, Vec::len) as f64;
    let per = match p.options.tail_method {
        TailMethod::Inversion => INVERSION_EVALS * w,
        TailMethod::IntegrateP => 50.0 * INVERSION_EVALS * w,
        TailMethod::Mc => p.options.tail_samples as f64 * (w + 1.0),
    };
    cost(Suite::QfTail, n * per, 8.0 * 8192.0, format!("{n} tail evaluations"))
}

// ------------------------------------------------------------ characterization

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedForm {
    /// `Z_1 Z_2 - Z_2 Z_3`.
    Example3,
    /// `2 Z_1^2 + 4 Z_1 Z_2 - Z_2^2`.
    Example4,
    /// `Z_1^2 - Z_2^2`.
    DifferenceOfSquares,
}

/// A form given by name or by its symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    Named(NamedForm),
    Matrix(SymmetricQuadraticForm),
}

impl FormSpec {
    pub fn form(&self) -> SymmetricQuadraticForm {
        match self {
            FormSpec::Named(NamedForm::Example3) => SymmetricQuadraticForm::example3(),
            FormSpec::Named(NamedForm::Example4) => SymmetricQuadraticForm::example4(),
            FormSpec::Named(NamedForm::DifferenceOfSquares) => SymmetricQuadraticForm::difference_of_squares(),
            FormSpec::Matrix(q) => q.clone(),
        }
    }
}

fn default_t_grid() -> Vec<f64> {
    (1..=16).map(|i| 0.25 * i as f64).collect()
}

fn with_classification(mut rep: EnvelopeReport, q: &SymmetricQuadraticForm) -> EnvelopeReport {
    let c = classify(q, DEFAULT_DEPTH);
    rep = rep.with_note(format!("case {}", c.label));
    if let Some(k) = c.vanishing_k {
        rep = rep.with_extra("vanishing_k", k as f64);
    }
    rep
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpTestParams {
    pub form: FormSpec,
    pub d1: Distribution,
    /// Second law; the signed-root counterexample built from `d1` when absent.
    pub d2: Option<Distribution>,
    /// Constant of the counterexample.
    pub c: f64,
    pub t_grid: Vec<f64>,
    pub n_samples: usize,
}

impl Default for CpTestParams {
    fn default() -> Self {
        CpTestParams {
            form: FormSpec::Named(NamedForm::DifferenceOfSquares),
            d1: Distribution::standard_normal(),
            d2: None,
            c: 1.0,
            t_grid: default_t_grid(),
            n_samples: 200_000,
        }
    }
}

fn cp_test(p: &CpTestParams, seed: u64) -> Result<Outcome, CliError> {
    let q = p.form.form();
    let d2 = match &p.d2 {
        Some(d) => d.clone(),
        None => counterexample_sampler(&p.d1, p.c)?,
    };
    let rep = cp_distance(&q, &p.d1, &d2, &p.t_grid, p.n_samples, seed)?;
    Ok(Outcome::report(with_classification(rep, &q)))
}

fn cp_cost(p: &CpTestParams) -> CostEstimate {
    let n = p.form.form().n() as f64;
    let ops = 2.0 * p.n_samples as f64 * (n * n + 2.0 * p.t_grid.len() as f64 + 20.0);
    cost(Suite::CpTest, ops, 4.0 * 8.0 * p.n_samples as f64, format!("2 x {} form draws", p.n_samples))
}

/// Perturbation family indexed by `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityFamily {
    /// `normal(0, variance 1 + 1/N)`.
    NormalVariance,
    /// Signed root `zeta (Z^2 + 1/N)^{1/2}`.
    SignedRoot,
}

impl StabilityFamily {
    fn law(self, n: u32) -> Distribution {
        let eps = 1.0 / n.max(1) as f64;
        match self {
            StabilityFamily::NormalVariance => Distribution::Normal { mean: 0.0, sd: (1.0 + eps).sqrt() },
            StabilityFamily::SignedRoot => {
                Distribution::SignedRoot { base: Box::new(Distribution::standard_normal()), c: eps }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityParams {
    pub form: FormSpec,
    pub family: StabilityFamily,
    pub target: Distribution,
    pub n_grid: Vec<u32>,
    pub metric: StabilityMetric,
    pub t_grid: Vec<f64>,
    pub n_samples: usize,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams {
            form: FormSpec::Named(NamedForm::Example3),
            family: StabilityFamily::NormalVariance,
            target: Distribution::standard_normal(),
            n_grid: vec![1, 2, 4, 8, 16, 32],
            metric: StabilityMetric::Ks,
            t_grid: default_t_grid(),
            n_samples: 200_000,
        }
    }
}

fn stability(p: &StabilityParams, seed: u64) -> Result<Outcome, CliError> {
    let q = p.form.form();
    let fam = p.family;
    let rep = stability_experiment(&q, &move |n| fam.law(n), &p.target, &p.n_grid, p.metric, &p.t_grid, p.n_samples, seed)?;
    Ok(Outcome::report(with_classification(rep, &q)))
}

fn stability_cost(p: &StabilityParams) -> CostEstimate {
    let n = p.form.form().n() as f64;
    let per = match p.metric {
        StabilityMetric::Ks => 40.0,
        StabilityMetric::CfSup => 2.0 * p.t_grid.len() as f64,
    };
    let ops = (p.n_grid.len() + 1) as f64 * p.n_samples as f64 * (n * n + per);
    cost(Suite::Stability, ops, 4.0 * 8.0 * p.n_samples as f64, format!("{} laws x {} draws", p.n_grid.len() + 1, p.n_samples))
}

// ---------------------------------------------------------------- dispatching

/// Runs `suite` with raw `params`.
pub fn execute(suite: Suite, params: &Value, seed: u64) -> Result<Outcome, CliError> {
    match suite {
        Suite::CantorScan => cantor(&parse(params)?),
        Suite::Weyl => weyl(&parse(params)?),
        Suite::JkCount => jk(&parse(params)?),
        Suite::Ik => ik(&parse(params)?, seed),
        Suite::VinogradovVerify => verify(&parse(params)?, seed),
        Suite::QfDensity => qf_density(&parse(params)?, seed),
        Suite::QfSandwich => qf_sandwich(&parse(params)?, seed),
        Suite::QfTail => qf_tail(&parse(params)?, seed),
        Suite::CpTest => cp_test(&parse(params)?, seed),
        Suite::Stability => stability(&parse(params)?, seed),
    }
}

/// Cost model of `suite` with raw `params`; never runs the kernel.
pub fn estimate(suite: Suite, params: &Value) -> Result<CostEstimate, CliError> {
    Ok(match suite {
        Suite::CantorScan => cantor_cost(&parse(params)?),
        Suite::Weyl => weyl_cost(&parse(params)?),
        Suite::JkCount => jk_cost(&parse(params)?),
        Suite::Ik => ik_cost(&parse(params)?),
        Suite::VinogradovVerify => verify_cost(&parse(params)?),
        Suite::QfDensity => qf_density_cost(&parse(params)?),
        Suite::QfSandwich => qf_sandwich_cost(&parse(params)?),
        Suite::QfTail => qf_tail_cost(&parse(params)?),
        Suite::CpTest => cp_cost(&parse(params)?),
        Suite::Stability => stability_cost(&parse(params)?),
    })
}

/// Default parameter block of `suite` as JSON.
pub fn defaults(suite: Suite) -> Value {
    let v = match suite {
        Suite::CantorScan => serde_json::to_value(CantorScanParams::default()),
        Suite::Weyl => serde_json::to_value(WeylParams::default()),
        Suite::JkCount => serde_json::to_value(JkCountParams::default()),
        Suite::Ik => serde_json::to_value(IkParams::default()),
        Suite::VinogradovVerify => serde_json::to_value(VerifyParams::default()),
        Suite::QfDensity => serde_json::to_value(QfDensityParams::default()),
        Suite::QfSandwich => serde_json::to_value(QfSandwichParams::default()),
        Suite::QfTail => serde_json::to_value(QfTailParams::default()),
        Suite::CpTest => serde_json::to_value(CpTestParams::default()),
        Suite::Stability => serde_json::to_value(StabilityParams::default()),
    };
    v.expect("defaults serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_round_trip_through_the_parsers() {
        for s in Suite::ALL {
            let d = defaults(s);
            estimate(s, &d).unwrap_or_else(|e| panic!("{s:?}: {e}"));
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = execute(Suite::JkCount, &json!({"p": 3, "q": 1}), 0).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
        let e = estimate(Suite::QfSandwich, &json!({"spec": {"k": 3, "head_variance": 1.0, "bogus": 1}})).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
    }

    #[test]
    fn forms_by_name_or_matrix() {
        let named: FormSpec = serde_json::from_value(json!("example3")).unwrap();
        assert_eq!(named.form(), SymmetricQuadraticForm::example3());
        let m: FormSpec = serde_json::from_value(json!([[1.0, 0.0], [0.0, -1.0]])).unwrap();
        assert_eq!(m.form(), SymmetricQuadraticForm::difference_of_squares());
        assert!(serde_json::from_value::<FormSpec>(json!("example9")).is_err());
    }

    #[test]
    fn jk_headline_is_the_count() {
        let o = execute(Suite::JkCount, &json!({"p": 3, "m": 3, "k": 2}), 0).unwrap();
        assert_eq!(o.headline.as_deref(), Some("15"));
        assert!(o.report.all_pass());
    }

    #[test]
    fn enumeration_cost_is_p_to_the_2k() {
        let e = estimate(Suite::JkCount, &json!({"p": 50, "m": 3, "k": 4, "method": "enumerate"})).unwrap();
        assert_eq!(e.operations, 50f64.powi(8));
        assert!(!e.feasible);
        let e = estimate(Suite::JkCount, &json!({"p": 50, "m": 3, "k": 2})).unwrap();
        assert!(e.feasible);
    }

    #[test]
    fn mc_costs_are_linear_in_sample_size() {
        let at = |n: usize| estimate(Suite::Ik, &json!({"options": {"n_mc": n}})).unwrap().operations;
        assert!((at(2000) / at(1000) - 2.0).abs() < 1e-12);
        let at = |n: usize| estimate(Suite::CpTest, &json!({"n_samples": n})).unwrap().operations;
        assert!((at(2000) / at(1000) - 2.0).abs() < 1e-12);
        let at = |n: usize| estimate(Suite::Stability, &json!({"n_samples": n})).unwrap().operations;
        assert!((at(2000) / at(1000) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weyl_zero_polynomial_is_trivial() {
        let o = execute(Suite::Weyl, &json!({"coeffs": [0.0, 0.0], "p_grid": [5, 7]}), 0).unwrap();
        assert!(o.report.points.iter().all(|p| (p.statistic - 1.0).abs() < 1e-12));
        assert!(o.report.all_pass());
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 5.0, 5), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
