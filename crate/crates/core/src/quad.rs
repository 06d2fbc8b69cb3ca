//! Adaptive Gauss–Kronrod quadrature and fixed Gauss–Legendre panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Value types the integrators can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

// 21-point Kronrod abscissae; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_245_421,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// 10-point Gauss–Legendre nodes on [-1, 1] (positive half) and weights.
pub const GAUSS10_NODES: [f64; 5] = [XGK[1], XGK[3], XGK[5], XGK[7], XGK[9]];
pub const GAUSS10_WEIGHTS: [f64; 5] = WG;

fn gk21<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = V::zero();
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub abs_error: f64,
    pub converged: bool,
    pub intervals: usize,
}

struct Piece<V> {
    a: f64,
    b: f64,
    value: V,
    err: f64,
}

impl<V> PartialEq for Piece<V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<V> Eq for Piece<V> {}
impl<V> PartialOrd for Piece<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Piece<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive GK21 on `[a, b]`, bisecting the worst interval until the
/// summed error estimate is below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<V, F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_intervals: usize) -> QuadResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if a == b {
        return QuadResult { value: V::zero(), abs_error: 0.0, converged: true, intervals: 0 };
    }
    let (v0, e0) = gk21(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v0, err: e0 });
    let mut total = v0;
    let mut err = e0;
    let mut count = 1;
    loop {
        if err <= abs_tol.max(rel_tol * total.magnitude()) {
            return QuadResult { value: total, abs_error: err, converged: true, intervals: count };
        }
        if count >= max_intervals.max(1) {
            break;
        }
        let worst = heap.pop().expect("heap non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (vl, el) = gk21(&mut f, worst.a, mid);
        let (vr, er) = gk21(&mut f, mid, worst.b);
        total = total - worst.value + vl + vr;
        err = err - worst.err + el + er;
        heap.push(Piece { a: worst.a, b: mid, value: vl, err: el });
        heap.push(Piece { a: mid, b: worst.b, value: vr, err: er });
        count += 1;
    }
    // re-sum to shed accumulated rounding from the running updates
    let value = heap.iter().fold(V::zero(), |acc, p| acc + p.value);
    let abs_error = heap.iter().map(|p| p.err).sum();
    QuadResult { value, abs_error, converged: false, intervals: count }
}

/// Integrates over consecutive breakpoints, summing values and errors.
pub fn integrate_pieces<V, F>(mut f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64, max_intervals: usize) -> QuadResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let mut out = QuadResult { value: V::zero(), abs_error: 0.0, converged: true, intervals: 0 };
    for w in breaks.windows(2) {
        let r = integrate(&mut f, w[0], w[1], abs_tol, rel_tol, max_intervals);
        out.value = out.value + r.value;
        out.abs_error += r.abs_error;
        out.converged &= r.converged;
        out.intervals += r.intervals;
    }
    out
}

/// Composite 10-point Gauss–Legendre rule with `panels` equal panels.
pub fn gauss_panels<V, F>(mut f: F, a: f64, b: f64, panels: usize) -> V
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = V::zero();
    for p in 0..panels {
        let lo = a + h * p as f64;
        let c = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = V::zero();
        for (x, w) in GAUSS10_NODES.iter().zip(GAUSS10_WEIGHTS.iter()) {
            s = s + (f(c - half * x) + f(c + half * x)) * *w;
        }
        total = total + s * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_degree_30() {
        let (v, _) = gk21(&mut |x: f64| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-15);
        let (v, _) = gk21(&mut |x: f64| x.powi(28) + x.powi(3), -1.0, 1.0);
        assert!((v - 2.0 / 29.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_panels_exact_for_degree_19() {
        let v: f64 = gauss_panels(|x| x.powi(19) + x.powi(18), -1.0, 1.0, 1);
        assert!((v - 2.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks() {
        // integral of exp(-x^2/(2 s^2)) over R is s sqrt(2 pi)
        let s = 1e-3;
        let r: QuadResult<f64> = integrate(|x| (-x * x / (2.0 * s * s)).exp(), -1.0, 1.0, 1e-15, 1e-12, 500);
        assert!(r.converged);
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn complex_oscillatory() {
        let r: QuadResult<Complex64> =
            integrate(|x| Complex64::new(0.0, 10.0 * x).exp(), 0.0, 1.0, 1e-14, 1e-12, 200);
        let exact = (Complex64::new(0.0, 10.0).exp() - 1.0) / Complex64::new(0.0, 10.0);
        assert!((r.value - exact).norm() < 1e-12);
    }
}
