//! Bromwich-line inversion by FFT.
//!
//! Along `p = gamma + i omega` the transform decays only like `1/p`, so a
//! model with the same poles and the same first three terms of the large-`p`
//! expansion is subtracted first:
//!
//! `S(p) = inc psi_E / (p - p_c) + A/(p + lambda) + B/(p + lambda)^2 + C/(p + lambda)^3`
//!
//! where `psi_hat ~ psi_0/p - i H psi_0/p^2 - H^2 psi_0/p^3`. The remainder
//! decays like `p^{-4}` and is inverted numerically; `S` is inverted in
//! closed form. The error estimate adds two terms: the difference against the
//! sum over every other sample (half the period), scaled down to the aliasing
//! of the full period, and the difference against the sum over the inner half
//! of the band, which bounds truncation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::laplace::{Channel, LaplaceBatch, Side, ValueDerivative};
use crate::stationary::FNSolution;

use super::contour::{fn_states, Grid};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    None,
    /// Raised-cosine roll-off over the outer half of the frequency band.
    CosineTaper,
}

impl Window {
    fn weight(self, omega: f64, omega_max: f64) -> f64 {
        match self {
            Window::None => 1.0,
            Window::CosineTaper => {
                let u = omega.abs() / omega_max;
                if u <= 0.5 {
                    1.0
                } else {
                    0.5 * (1.0 + (PI * (u - 0.5) / 0.5).cos())
                }
            }
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::None => "none",
            Window::CosineTaper => "cosine-taper",
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Window::None),
            "cosine-taper" => Ok(Window::CosineTaper),
            other => Err(Error::InvalidParameter(format!("unknown window '{other}'"))),
        }
    }
}

pub const MIN_SAMPLES: usize = 1 << 10;
/// FFT period as a multiple of the last requested time.
pub const PERIOD_FACTOR: f64 = 8.0;

/// Discretisation of the Bromwich line `p = gamma + i omega`,
/// `|omega| <= omega_max`, with `n_samples` equally spaced frequencies. The
/// FFT returns times spaced `pi / omega_max` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub gamma: f64,
    pub omega_max: f64,
    pub n_samples: usize,
    pub window: Window,
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Contour(format!("gamma = {} must be > 0", self.gamma)));
        }
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(Error::Contour(format!("omega_max = {} must be > 0", self.omega_max)));
        }
        if self.n_samples < MIN_SAMPLES || !self.n_samples.is_power_of_two() {
            return Err(Error::Contour(format!(
                "n_samples = {} must be a power of two >= {MIN_SAMPLES}",
                self.n_samples
            )));
        }
        Ok(())
    }

    pub fn time_step(&self) -> f64 {
        PI / self.omega_max
    }

    pub fn period(&self) -> f64 {
        self.n_samples as f64 * self.time_step()
    }

    pub fn frequency_step(&self) -> f64 {
        2.0 * self.omega_max / self.n_samples as f64
    }

    /// Defaults for a uniform grid: `gamma = 2/t_max`, the smallest band of at
    /// least `omega_min` whose time step divides the grid step, and a period
    /// of at least four times `t_max`.
    pub fn for_grid(grid: &TimeGrid, omega_min: f64, window: Window) -> Result<Self> {
        let t_max = grid.last();
        let ratio = (omega_min * grid.step / PI).ceil().max(1.0);
        let omega_max = ratio * PI / grid.step;
        let dt = grid.step / ratio;
        let needed = (PERIOD_FACTOR * t_max / dt).ceil() as usize;
        let spec = Self {
            gamma: 2.0 / t_max,
            omega_max,
            n_samples: needed.max(MIN_SAMPLES).next_power_of_two(),
            window,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Uniform time grid `start + i step`, `i < len`, with `start > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(start > 0.0 && step > 0.0 && len > 0) {
            return Err(Error::InvalidParameter(format!(
                "time grid needs start > 0, step > 0 and at least one point (got {start}, {step}, {len})"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// `len` points ending at `t_max`, spaced `t_max / len`.
    pub fn up_to(t_max: f64, len: usize) -> Result<Self> {
        Self::new(t_max / len as f64, t_max / len as f64, len)
    }

    pub fn from_points(ts: &[f64]) -> Result<Self> {
        match ts {
            [] => Err(Error::InvalidParameter("empty time grid".into())),
            [t] => Self::new(*t, *t, 1),
            [a, b, ..] => {
                let step = b - a;
                for (i, t) in ts.iter().enumerate() {
                    let want = a + i as f64 * step;
                    if (t - want).abs() > 1e-9 * want.abs().max(step) {
                        return Err(Error::InvalidParameter(format!("time grid is not uniform at index {i}")));
                    }
                }
                Self::new(*a, step, ts.len())
            }
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn last(&self) -> f64 {
        self.start + (self.len - 1) as f64 * self.step
    }
}

/// Closed-form part of the transform at one `(channel, x)`, for the value
/// and the x-derivative.
#[derive(Debug, Clone, Copy)]
struct Model {
    pole: Complex64,
    residue: ValueDerivative,
    a: ValueDerivative,
    b: ValueDerivative,
    c: ValueDerivative,
}

pub const MODEL_RATE: f64 = 1.0;

/// `H^n psi(x, 0)` and x-derivatives for `n = 0, 1, 2`.
fn hamiltonian_powers(ch: &Channel, field: f64, x: f64) -> [ValueDerivative; 3] {
    let (v, d) = ch.initial_value(x);
    let e = 0.5 * ch.k * ch.k;
    if x < 0.0 {
        [(v, d), (e * v, e * d), (e * e * v, e * e * d)]
    } else {
        let f = e - field * x;
        let g = f * f - field * ch.kappa;
        [(v, d), (f * v, f * d - field * v), (g * v, g * d - 2.0 * field * f * v)]
    }
}

impl Model {
    fn new(ch: &Channel, state: &FNSolution, field: f64, x: f64) -> Self {
        let lam = MODEL_RATE;
        let pc = ch.pole();
        let (ev, ed) = state.eval(x);
        let residue = (ch.incident * ev, ch.incident * ed);
        let [h0, h1, h2] = hamiltonian_powers(ch, field, x);
        let part = |r: Complex64, a1: Complex64, h1: Complex64, h2: Complex64| {
            let a2 = -I * h1;
            let a3 = -h2;
            let a = a1 - r;
            let b = a2 - r * pc + lam * a;
            let c = a3 - r * pc * pc - lam * lam * a + 2.0 * lam * b;
            (a, b, c)
        };
        let (av, bv, cv) = part(residue.0, h0.0, h1.0, h2.0);
        let (ad, bd, cd) = part(residue.1, h0.1, h1.1, h2.1);
        Self {
            pole: pc,
            residue,
            a: (av, ad),
            b: (bv, bd),
            c: (cv, cd),
        }
    }

    fn transform(&self, p: Complex64) -> ValueDerivative {
        let q = 1.0 / (p + MODEL_RATE);
        let r = 1.0 / (p - self.pole);
        let f = |res: Complex64, a: Complex64, b: Complex64, c: Complex64| res * r + q * (a + q * (b + q * c));
        (
            f(self.residue.0, self.a.0, self.b.0, self.c.0),
            f(self.residue.1, self.a.1, self.b.1, self.c.1),
        )
    }

    fn time(&self, t: f64) -> ValueDerivative {
        let e = (self.pole * t).exp();
        let d = (-MODEL_RATE * t).exp();
        let f = |res: Complex64, a: Complex64, b: Complex64, c: Complex64| res * e + d * (a + t * (b + 0.5 * t * c));
        (
            f(self.residue.0, self.a.0, self.b.0, self.c.0),
            f(self.residue.1, self.a.1, self.b.1, self.c.1),
        )
    }
}

fn models(batch: &LaplaceBatch, xs: &[f64]) -> Result<Vec<Vec<Model>>> {
    let states = fn_states(batch)?;
    let field = batch.region().field;
    Ok(batch
        .channels()
        .iter()
        .zip(&states)
        .map(|(ch, st)| xs.iter().map(|&x| Model::new(ch, st, field, x)).collect())
        .collect())
}

/// Transform minus the closed-form model, flattened as
/// `[(channel * nx + x) * 2 + {0: value, 1: derivative}]`.
fn remainder(batch: &LaplaceBatch, models: &[Vec<Model>], xs: &[f64], p: Complex64) -> Result<Vec<Complex64>> {
    let vals = batch.eval(p, Side::Principal, xs)?;
    let mut out = Vec::with_capacity(2 * xs.len() * vals.len());
    for (row, mrow) in vals.iter().zip(models) {
        for (v, m) in row.iter().zip(mrow) {
            let s = m.transform(p);
            out.push(v.0 - s.0);
            out.push(v.1 - s.1);
        }
    }
    Ok(out)
}

/// Magnitude of the subtracted transform along the Bromwich line: the peak
/// over low frequencies and the largest value at each `2^j`.
pub fn remainder_profile(batch: &LaplaceBatch, xs: &[f64], gamma: f64, max_power: u32) -> Result<(f64, Vec<(f64, f64)>)> {
    let models = models(batch, xs)?;
    let norm = |v: &[Complex64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut peak: f64 = 0.0;
    for w in [-1.0, -0.5, -0.2, -0.1, 0.0, 0.1, 0.2, 0.5, 1.0] {
        peak = peak.max(norm(&remainder(batch, &models, xs, Complex64::new(gamma, w))?));
    }
    let mut tail = Vec::new();
    for j in 1..=max_power {
        let w = 2f64.powi(j as i32);
        let a = norm(&remainder(batch, &models, xs, Complex64::new(gamma, w))?);
        let b = norm(&remainder(batch, &models, xs, Complex64::new(gamma, -w))?);
        tail.push((w, a.max(b)));
        peak = peak.max(a.max(b));
    }
    Ok((peak, tail))
}

/// Smallest `2^j`, `j >= 1`, at which the subtracted transform has dropped
/// below `ratio` times its peak.
pub fn suggest_omega_max(batch: &LaplaceBatch, xs: &[f64], gamma: f64, ratio: f64) -> Result<f64> {
    let max_power = 10;
    let (peak, tail) = remainder_profile(batch, xs, gamma, max_power)?;
    for (w, v) in &tail {
        if *v <= ratio * peak {
            return Ok(*w);
        }
    }
    Ok(tail.last().map(|t| t.0).unwrap_or(2.0))
}

/// `psi` and `d psi/dx` on the grid, `[channel][x][t]`, with error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub times: Vec<f64>,
    pub values: Vec<Vec<Vec<ValueDerivative>>>,
    /// Per time: the largest estimated absolute error of `psi` over all
    /// channels and positions. This is what the tolerance applies to.
    pub error: Vec<f64>,
    /// The same for `d psi/dx`, which converges more slowly in the band
    /// (its transform decays like `p^{-2}`); reported, not enforced.
    pub derivative_error: Vec<f64>,
    pub spec: ContourSpec,
}

impl Inversion {
    pub fn max_error(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }

    /// Values at time index `i`, `[channel][x]`.
    pub fn at(&self, i: usize) -> Grid {
        self.values
            .iter()
            .map(|row| row.iter().map(|series| series[i]).collect())
            .collect()
    }
}

/// Inverse Laplace transform on a uniform grid. Fails with the estimate
/// attached when the estimated error exceeds `tolerance`.
pub fn invert(batch: &LaplaceBatch, xs: &[f64], grid: &TimeGrid, spec: &ContourSpec, tolerance: f64) -> Result<Inversion> {
    let out = invert_unchecked(batch, xs, grid, spec)?;
    let estimate = out.max_error();
    if !(estimate <= tolerance) {
        return Err(Error::InversionNotConverged { estimate, tolerance });
    }
    Ok(out)
}

/// As `invert`, but returns the result whatever the error estimate.
pub fn invert_unchecked(batch: &LaplaceBatch, xs: &[f64], grid: &TimeGrid, spec: &ContourSpec) -> Result<Inversion> {
    spec.validate()?;
    let dt = spec.time_step();
    let stride = grid.step / dt;
    let stride_n = stride.round();
    if grid.len > 1 && (stride - stride_n).abs() > 1e-6 * stride {
        return Err(Error::Contour(format!(
            "grid step {} is not a multiple of the contour time step {dt}",
            grid.step
        )));
    }
    let stride_n = if grid.len > 1 { stride_n as usize } else { 0 };
    let span = grid.last() - grid.start;
    if span >= 0.5 * spec.period() {
        return Err(Error::Contour(format!(
            "grid spans {span}, more than half the contour period {}",
            spec.period()
        )));
    }
    let n = spec.n_samples;
    let dw = spec.frequency_step();
    let t0 = grid.start;
    let models = models(batch, xs)?;
    let ncomp = 2 * xs.len() * batch.channels().len();

    let omegas: Vec<f64> = (0..n).map(|j| (j as f64 - 0.5 * n as f64) * dw).collect();
    let samples: Vec<Vec<Complex64>> = omegas
        .par_iter()
        .map(|&w| remainder(batch, &models, xs, Complex64::new(spec.gamma, w)))
        .collect::<Result<_>>()?;

    let mut planner = FftPlanner::<f64>::new();
    let full_fft = planner.plan_fft_inverse(n);
    let half_fft = planner.plan_fft_inverse(n / 2);
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    let mut half = vec![Complex64::new(0.0, 0.0); n / 2];
    let mut narrow = vec![Complex64::new(0.0, 0.0); n];

    // The half-period sum aliases the remainder at t + P/2 with weight
    // e^{-gamma P/2}; the full sum sees t + P with weight e^{-gamma P}. For a
    // remainder that does not grow, the full-period error is therefore at
    // most e^{-gamma P/2} times the difference of the two sums.
    let alias = (-0.5 * spec.gamma * spec.period()).exp();
    let times = grid.points();
    let nx = xs.len();
    let mut values = vec![vec![vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); grid.len]; nx]; batch.channels().len()];
    let mut error = vec![0.0f64; grid.len];
    let mut derivative_error = vec![0.0f64; grid.len];
    for c in 0..ncomp {
        for j in 0..n {
            let w = omegas[j];
            let h = samples[j][c] * Complex64::from_polar(1.0, w * t0);
            full[j] = h * spec.window.weight(w, spec.omega_max);
            narrow[j] = if w.abs() <= 0.5 * spec.omega_max {
                h * spec.window.weight(w, 0.5 * spec.omega_max)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        for m in 0..n / 2 {
            half[m] = full[2 * m];
        }
        full_fft.process(&mut full);
        half_fft.process(&mut half);
        full_fft.process(&mut narrow);
        let (ch, rest) = (c / (2 * nx), c % (2 * nx));
        let (xi, part) = (rest / 2, rest % 2);
        for (i, &t) in times.iter().enumerate() {
            let idx = i * stride_n;
            let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
            let damp = (spec.gamma * t).exp();
            let a = full[idx] * (sign * damp * dw / (2.0 * PI));
            let b = half[idx % (n / 2)] * (sign * damp * 2.0 * dw / (2.0 * PI));
            let band = narrow[idx] * (sign * damp * dw / (2.0 * PI));
            let closed = models[ch][xi].time(t);
            let estimate = alias * (a - b).norm() + (a - band).norm();
            if part == 0 {
                values[ch][xi][i].0 = a + closed.0;
                error[i] = error[i].max(estimate);
            } else {
                values[ch][xi][i].1 = a + closed.1;
                derivative_error[i] = derivative_error[i].max(estimate);
            }
        }
    }
    Ok(Inversion {
        times,
        values,
        error,
        derivative_error,
        spec: *spec,
    })
}
