//! Density, current and supply-integrated current on an `(x, t)` grid.
//!
//! Early times come from the FFT inversion; later times (where the deformed
//! contour is valid and much cheaper) from poles plus the branch cut. The
//! x-derivative is always the inverse transform of the analytic derivative.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inversion::contour::{fn_states, CutOptions, DeformedContour};
use crate::inversion::fft::{invert, suggest_omega_max, ContourSpec, TimeGrid, Window};
use crate::inversion::poles::{find_poles_default, Pole};
use crate::laplace::{Channel, InitialCondition, LaplaceBatch, ValueDerivative};
use crate::quadrature::{gauss_legendre_on, QuadOptions};
use crate::stationary::transmission;
use crate::units::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// FFT on the Bromwich line for every time.
    Fft,
    /// Deformed contour for every time.
    Contour,
    /// FFT up to the switch time, deformed contour after it.
    Auto,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fft" => Ok(Method::Fft),
            "contour" => Ok(Method::Contour),
            "auto" => Ok(Method::Auto),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Fft => "fft",
            Method::Contour => "contour",
            Method::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    pub method: Method,
    /// Time (au) after which `Auto` uses the deformed contour.
    pub switch_time: f64,
    /// FFT band; `None` starts from the smallest power of two where the
    /// subtracted transform is below `1e-3` of its peak and doubles it until
    /// the error estimate meets the tolerance.
    pub omega_max: Option<f64>,
    pub gamma: Option<f64>,
    pub window: Window,
    /// Absolute tolerance on the FFT error estimate.
    pub tolerance: f64,
    pub cut: CutOptions,
    pub quad: QuadOptions,
}

pub const OMEGA_RATIO: f64 = 1e-3;
pub const MAX_AUTO_OMEGA: f64 = 1024.0;

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            switch_time: 1000.0,
            omega_max: None,
            gamma: None,
            window: Window::CosineTaper,
            tolerance: 1e-6,
            cut: CutOptions::default(),
            quad: QuadOptions::default(),
        }
    }
}

/// `i (psi dpsi* - psi* dpsi)` in complex arithmetic; the imaginary part is
/// a rounding residue kept as a check.
pub fn current_complex(psi: Complex64, dpsi: Complex64) -> Complex64 {
    Complex64::i() * (psi * dpsi.conj() - psi.conj() * dpsi)
}

/// `psi`, `d psi/dx` for every channel, position and time, `[channel][x][t]`,
/// and the FFT error estimates per time (zero for contour times).
pub struct Evolution {
    pub times: Vec<f64>,
    pub values: Vec<Vec<Vec<ValueDerivative>>>,
    pub error: Vec<f64>,
    pub derivative_error: Vec<f64>,
    /// FFT parameters per time segment, latest segment first.
    pub specs: Vec<ContourSpec>,
}

/// Time evolution of a batch of channels.
pub fn evolve_batch(batch: &LaplaceBatch, xs: &[f64], grid: &TimeGrid, opts: &EvolutionOptions) -> Result<Evolution> {
    let times = grid.points();
    let split = match opts.method {
        Method::Fft => times.len(),
        Method::Contour => 0,
        Method::Auto => times.iter().take_while(|&&t| t <= opts.switch_time).count(),
    };
    let nch = batch.channels().len();
    let zero = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let mut values = vec![vec![vec![zero; times.len()]; xs.len()]; nch];
    let mut error = vec![0.0; times.len()];
    let mut derivative_error = vec![0.0; times.len()];
    let mut specs = Vec::new();

    // Ringing from the sudden switch-on is confined to t of order 1/omega_max,
    // so early times need a wide band but only a short period. Dyadic
    // segments, latest first, keep the sample count per segment bounded.
    let mut end = split;
    let mut omega_floor = 0.0_f64;
    while end > 0 {
        let half = 0.5 * times[end - 1];
        let begin = times[..end].iter().take_while(|&&t| t <= half).count();
        let sub = TimeGrid::new(times[begin], grid.step, end - begin)?;
        let gamma = opts.gamma.unwrap_or(2.0 / sub.last());
        let (mut omega, fixed) = match opts.omega_max {
            Some(w) => (w, true),
            None => (suggest_omega_max(batch, xs, gamma, OMEGA_RATIO)?.max(omega_floor), false),
        };
        // Without a fixed band, widen it until the error estimate passes.
        let (inv, spec) = loop {
            let mut spec = ContourSpec::for_grid(&sub, omega, opts.window)?;
            spec.gamma = gamma;
            match invert(batch, xs, &sub, &spec, opts.tolerance) {
                Ok(inv) => break (inv, spec),
                Err(Error::InversionNotConverged { .. }) if !fixed && omega < MAX_AUTO_OMEGA => omega *= 2.0,
                Err(e) => return Err(e),
            }
        };
        for c in 0..nch {
            for xi in 0..xs.len() {
                values[c][xi][begin..end].copy_from_slice(&inv.values[c][xi]);
            }
        }
        error[begin..end].copy_from_slice(&inv.error);
        derivative_error[begin..end].copy_from_slice(&inv.derivative_error);
        omega_floor = omega;
        specs.push(spec);
        end = begin;
    }
    if split < times.len() {
        let poles: Vec<Pole> = find_poles_default(batch.region())?.poles;
        let contour = DeformedContour::new(&poles, opts.cut);
        let states = fn_states(batch)?;
        let late: Vec<_> = times[split..]
            .par_iter()
            .map(|&t| contour.decompose(batch, &states, xs, t).map(|d| d.total()))
            .collect::<Result<_>>()?;
        for (i, grid_t) in late.into_iter().enumerate() {
            for c in 0..nch {
                for xi in 0..xs.len() {
                    values[c][xi][split + i] = grid_t[c][xi];
                }
            }
        }
    }
    Ok(Evolution {
        times,
        values,
        error,
        derivative_error,
        specs,
    })
}

/// Per-point data for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesGrid {
    pub params: PhysicalParams,
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    /// `[x][t]`.
    pub psi: Vec<Vec<Complex64>>,
    pub dpsi: Vec<Vec<Complex64>>,
    pub density: Vec<Vec<f64>>,
    pub current: Vec<Vec<f64>>,
    /// Imaginary residue of the complex current expression.
    pub current_imag: Vec<Vec<f64>>,
    /// Current divided by the incident current `2k`.
    pub current_norm: Vec<Vec<f64>>,
    /// FFT error estimate of `psi` per time.
    pub error: Vec<f64>,
    /// FFT error estimate of `d psi/dx` per time.
    pub derivative_error: Vec<f64>,
    /// FFT parameters per time segment, latest segment first.
    pub specs: Vec<ContourSpec>,
}

pub fn density_current(
    params: &PhysicalParams,
    init: &InitialCondition,
    xs: &[f64],
    grid: &TimeGrid,
    opts: &EvolutionOptions,
) -> Result<TimeSeriesGrid> {
    params.require_field()?;
    let channel = Channel::new(params, init)?;
    let batch = LaplaceBatch::new(params.barrier, params.field, vec![channel], opts.quad)?;
    let ev = evolve_batch(&batch, xs, grid, opts)?;
    let series = &ev.values[0];
    let map = |f: &dyn Fn(&ValueDerivative) -> f64| -> Vec<Vec<f64>> {
        series.iter().map(|row| row.iter().map(f).collect()).collect()
    };
    let two_k = 2.0 * params.k;
    Ok(TimeSeriesGrid {
        params: *params,
        xs: xs.to_vec(),
        times: ev.times.clone(),
        psi: series.iter().map(|r| r.iter().map(|v| v.0).collect()).collect(),
        dpsi: series.iter().map(|r| r.iter().map(|v| v.1).collect()).collect(),
        density: map(&|v| v.0.norm_sqr()),
        current: map(&|v| current_complex(v.0, v.1).re),
        current_imag: map(&|v| current_complex(v.0, v.1).im),
        current_norm: map(&|v| current_complex(v.0, v.1).re / two_k),
        error: ev.error.clone(),
        derivative_error: ev.derivative_error.clone(),
        specs: ev.specs.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedCurrent {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    /// `J(x, t) = int_0^{k_F} j_k(x, t) dk`, `[x][t]`.
    pub current: Vec<Vec<f64>>,
    /// `J / k_F^2`.
    pub current_norm: Vec<Vec<f64>>,
    pub k_nodes: Vec<f64>,
    pub error: Vec<f64>,
    pub derivative_error: Vec<f64>,
}

pub const MIN_K_NODES: usize = 16;

/// Supply-integrated current by Gauss–Legendre over `k in (0, k_F]`, each
/// node a full time evolution with its own step initial condition.
pub fn integrated_current(
    params: &PhysicalParams,
    xs: &[f64],
    grid: &TimeGrid,
    n_k: usize,
    opts: &EvolutionOptions,
) -> Result<IntegratedCurrent> {
    if n_k < MIN_K_NODES {
        return Err(Error::InvalidParameter(format!("k-node count {n_k} must be >= {MIN_K_NODES}")));
    }
    params.require_field()?;
    let (ks, weights) = gauss_legendre_on(n_k, 0.0, params.k_fermi);
    let channels = ks
        .iter()
        .enumerate()
        .map(|(node, &k)| {
            params
                .with_k(k)
                .and_then(|p| Channel::new(&p, &InitialCondition::default()))
                .map_err(|e| Error::SupplyNode {
                    node,
                    k,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let batch = LaplaceBatch::new(params.barrier, params.field, channels, opts.quad)?;
    let ev = evolve_batch(&batch, xs, grid, opts)?;
    let nt = ev.times.len();
    let mut current = vec![vec![0.0; nt]; xs.len()];
    // Fixed node order for a reproducible sum.
    for (c, w) in weights.iter().enumerate() {
        for xi in 0..xs.len() {
            for ti in 0..nt {
                let (v, d) = ev.values[c][xi][ti];
                current[xi][ti] += w * current_complex(v, d).re;
            }
        }
    }
    let kf2 = params.k_fermi * params.k_fermi;
    let current_norm = current.iter().map(|r| r.iter().map(|j| j / kf2).collect()).collect();
    Ok(IntegratedCurrent {
        xs: xs.to_vec(),
        times: ev.times,
        current,
        current_norm,
        k_nodes: ks,
        error: ev.error,
        derivative_error: ev.derivative_error,
    })
}

/// Long-time limit of `J / k_F^2`: `(1/k_F^2) int_0^{k_F} 2k D(k) dk` with
/// the same nodes as `integrated_current`.
pub fn integrated_current_limit(params: &PhysicalParams, n_k: usize) -> Result<f64> {
    let (ks, weights) = gauss_legendre_on(n_k, 0.0, params.k_fermi);
    let mut sum = 0.0;
    for (k, w) in ks.iter().zip(&weights) {
        sum += w * 2.0 * k * transmission(&params.with_k(*k)?)?;
    }
    Ok(sum / (params.k_fermi * params.k_fermi))
}
