//! Quadrature for vector-valued complex integrands.
//!
//! Adaptive Gauss–Kronrod (10/21 points, QUADPACK error heuristic) on finite
//! intervals, panel marching for semi-infinite ones, and Gauss–Legendre rules
//! for fixed-node sums. An integrand fills a slice with `dim` components at
//! once so expensive shared work (Airy evaluations) is done once per node.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_292_526_207,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes (the 10-point Gauss rule).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Per-component tolerance relative to the component's L1 norm.
    pub rel_tol: f64,
    /// Per-component absolute floor.
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: Vec<Complex64>,
    pub error: Vec<f64>,
    /// Estimate of the integral of |f| per component.
    pub l1: Vec<f64>,
    pub evaluations: usize,
}

impl QuadResult {
    fn zeros(dim: usize) -> Self {
        Self {
            value: vec![Complex64::new(0.0, 0.0); dim],
            error: vec![0.0; dim],
            l1: vec![0.0; dim],
            evaluations: 0,
        }
    }

    fn accumulate(&mut self, other: &QuadResult) {
        for i in 0..self.value.len() {
            self.value[i] += other.value[i];
            self.error[i] += other.error[i];
            self.l1[i] += other.l1[i];
        }
        self.evaluations += other.evaluations;
    }

    fn converged(&self, opts: &QuadOptions) -> bool {
        self.error
            .iter()
            .zip(&self.l1)
            .all(|(e, l)| *e <= opts.abs_tol.max(opts.rel_tol * l))
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: Vec<f64>,
    l1: Vec<f64>,
    priority: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

/// One 21-point Kronrod evaluation with the QUADPACK error heuristic.
fn kronrod<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [Vec<Complex64>; 21]) -> (Vec<Complex64>, Vec<f64>, Vec<f64>)
where
    F: FnMut(f64, &mut [Complex64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // Node ordering: 0..10 left of centre (XGK order), 10 centre, 11..21 right.
    for (j, &x) in XGK.iter().enumerate() {
        if j == 10 {
            f(center, &mut buf[10]);
        } else {
            f(center - half * x, &mut buf[j]);
            f(center + half * x, &mut buf[20 - j]);
        }
    }
    let mut value = vec![Complex64::new(0.0, 0.0); dim];
    let mut error = vec![0.0; dim];
    let mut l1 = vec![0.0; dim];
    let eps = f64::EPSILON;
    for i in 0..dim {
        let fc = buf[10][i];
        let mut resk = fc * WGK[10];
        let mut resg = Complex64::new(0.0, 0.0);
        let mut resabs = fc.norm() * WGK[10];
        for j in 0..10 {
            let (l, r) = (buf[j][i], buf[20 - j][i]);
            resk += (l + r) * WGK[j];
            resabs += (l.norm() + r.norm()) * WGK[j];
            if j % 2 == 1 {
                resg += (l + r) * WG[j / 2];
            }
        }
        let mean = resk * 0.5;
        let mut resasc = (fc - mean).norm() * WGK[10];
        for j in 0..10 {
            resasc += ((buf[j][i] - mean).norm() + (buf[20 - j][i] - mean).norm()) * WGK[j];
        }
        let hl = half.abs();
        let resabs = resabs * hl;
        let resasc = resasc * hl;
        let mut err = ((resk - resg) * half).norm();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * eps) {
            err = err.max(50.0 * eps * resabs);
        }
        value[i] = resk * half;
        error[i] = err;
        l1[i] = resabs;
    }
    (value, error, l1)
}

fn new_buffers(dim: usize) -> [Vec<Complex64>; 21] {
    std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); dim])
}

/// Adaptive integral of a `dim`-component integrand over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, opts: &QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let mut buf = new_buffers(dim);
    integrate_with(&mut f, a, b, dim, opts, &mut buf)
}

fn priority(error: &[f64], l1: &[f64], opts: &QuadOptions, total_l1: &[f64]) -> f64 {
    error
        .iter()
        .zip(l1)
        .zip(total_l1)
        .map(|((e, _), t)| e / opts.abs_tol.max(opts.rel_tol * t).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn integrate_with<F>(
    f: &mut F,
    a: f64,
    b: f64,
    dim: usize,
    opts: &QuadOptions,
    buf: &mut [Vec<Complex64>; 21],
) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let mut result = QuadResult::zeros(dim);
    if a == b {
        return Ok(result);
    }
    let (value, error, l1) = kronrod(f, a, b, dim, buf);
    result.evaluations = 21;
    result.value = value.clone();
    result.error = error.clone();
    result.l1 = l1.clone();
    if result.converged(opts) {
        return Ok(result);
    }
    let mut heap = BinaryHeap::new();
    let p = priority(&error, &l1, opts, &result.l1);
    heap.push(Panel { a, b, value, error, l1, priority: p });
    let mut subdivisions = 0;
    while subdivisions < opts.max_subdivisions {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le, ll) = kronrod(f, worst.a, mid, dim, buf);
        let (rv, re, rl) = kronrod(f, mid, worst.b, dim, buf);
        result.evaluations += 42;
        for i in 0..dim {
            result.value[i] += lv[i] + rv[i] - worst.value[i];
            result.error[i] += le[i] + re[i] - worst.error[i];
            result.l1[i] += ll[i] + rl[i] - worst.l1[i];
        }
        subdivisions += 1;
        let pl = priority(&le, &ll, opts, &result.l1);
        let pr = priority(&re, &rl, opts, &result.l1);
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le, l1: ll, priority: pl });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re, l1: rl, priority: pr });
        if subdivisions % 8 == 0 || heap.len() < 16 {
            // Re-sum errors from scratch now and then to shed accumulated rounding.
            let mut err = vec![0.0; dim];
            for panel in heap.iter() {
                for i in 0..dim {
                    err[i] += panel.error[i];
                }
            }
            result.error = err;
        }
        if result.converged(opts) {
            return Ok(result);
        }
    }
    let estimate = result
        .error
        .iter()
        .zip(&result.l1)
        .map(|(e, l)| e / l.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Err(Error::Quadrature {
        lower: a,
        upper: b,
        estimate,
        subdivisions,
    })
}

/// Integral over `[a, inf)` by marching panels of width `panel`, each
/// integrated adaptively. Marching stops once two consecutive panels add less
/// than `rel_tol` of the running L1 norm in every component.
pub fn integrate_to_infinity<F>(mut f: F, a: f64, panel: f64, dim: usize, opts: &QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [Complex64]),
{
    if !(panel > 0.0) {
        return Err(Error::InvalidParameter(format!("panel width {panel} must be positive")));
    }
    let mut buf = new_buffers(dim);
    let mut total = QuadResult::zeros(dim);
    let mut quiet = 0;
    let max_panels = 10_000;
    for j in 0..max_panels {
        let lo = a + j as f64 * panel;
        let hi = lo + panel;
        // Panel tolerance relative to the running total so small tail panels
        // are not refined to their own (irrelevant) relative accuracy.
        let panel_result = integrate_with(&mut f, lo, hi, dim, &panel_options(opts, &total), &mut buf)?;
        let negligible = panel_result
            .l1
            .iter()
            .zip(&total.l1)
            .all(|(p, t)| *p <= opts.rel_tol * 1e-2 * (t + p) || *p <= opts.abs_tol * 1e-2);
        total.accumulate(&panel_result);
        if negligible && j > 0 {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Quadrature {
        lower: a,
        upper: a + max_panels as f64 * panel,
        estimate: f64::NAN,
        subdivisions: max_panels,
    })
}

fn panel_options(opts: &QuadOptions, total: &QuadResult) -> QuadOptions {
    // The smallest running L1 sets the absolute floor; zero before the first panel.
    let floor = total
        .l1
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor * opts.rel_tol * 0.1 } else { 0.0 };
    QuadOptions {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol.max(floor),
        max_subdivisions: opts.max_subdivisions,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<Vec<(usize, Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    if let Some((_, x, w)) = cache.lock().unwrap().iter().find(|(m, _, _)| *m == n) {
        return (x.clone(), w.clone());
    }
    let (x, w) = compute_gauss_legendre(n);
    cache.lock().unwrap().push((n, x.clone(), w.clone()));
    (x, w)
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| v * h).collect())
}
