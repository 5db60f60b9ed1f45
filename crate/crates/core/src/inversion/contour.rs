//! Pieces of the deformed Bromwich contour: the principal pole, resonance
//! poles and the branch cut along the negative real axis.
//!
//! The transform grows like `exp(c |p|^2)` along the negative real axis (the
//! field-region solutions grow with `|Re p| sqrt(x)`), so the cut cannot be
//! followed to `-infinity`. It is followed to `-a` instead, the contour
//! closes along `Re p = -a`, and poles with `Re p > -a` are collected. The
//! neglected vertical piece is of order `exp(-a t)` times the growth factor,
//! so `a` is chosen per time and position and early times are refused.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laplace::{LaplaceBatch, Side, ValueDerivative};
use crate::quadrature::gauss_legendre_on;
use crate::stationary::{fn_solve, FNSolution};
use crate::units::PhysicalParams;

use super::poles::Pole;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub type Grid = Vec<Vec<ValueDerivative>>;

fn zeros(channels: usize, xs: usize) -> Grid {
    vec![vec![(ZERO, ZERO); xs]; channels]
}

/// Field-emission states for every channel of a batch.
pub fn fn_states(batch: &LaplaceBatch) -> Result<Vec<FNSolution>> {
    let region = batch.region();
    batch
        .channels()
        .iter()
        .map(|c| fn_solve(&PhysicalParams::new(region.barrier, region.field, c.k, c.k)?))
        .collect()
}

/// Residue at `p = -i k^2/2` by the trapezoidal rule on a circle of the given
/// radius, `[channel][x]`, without the `e^{pt}` factor.
pub fn principal_residue(batch: &LaplaceBatch, xs: &[f64], radius: f64, nodes: usize) -> Result<Grid> {
    let mut out = zeros(batch.channels().len(), xs.len());
    for (ci, ch) in batch.channels().iter().enumerate() {
        let pc = ch.pole();
        if !(radius > 0.0 && radius < 0.5 * pc.norm()) {
            return Err(Error::ResidueContour(format!(
                "radius {radius} must be positive and below half the distance {} to the branch point",
                pc.norm()
            )));
        }
        let sub = LaplaceBatch::new(
            batch.region().barrier,
            batch.region().field,
            vec![*ch],
            *batch.options(),
        )?;
        let mut acc = vec![(ZERO, ZERO); xs.len()];
        for j in 0..nodes {
            let e = Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / nodes as f64);
            let p = pc + radius * e;
            let (d, _) = sub.determinant(p, Side::Principal)?;
            let (w, l) = (crate::laplace::sqrt_branch(p)?, batch.region().surface_log_derivative(p).0);
            if d.norm() < 1e-3 * (w.norm() + l.norm()) {
                return Err(Error::ResidueContour(format!(
                    "circle of radius {radius} passes near a resonance pole at {p}"
                )));
            }
            let vals = sub.eval(p, Side::Principal, xs)?;
            for (a, v) in acc.iter_mut().zip(&vals[0]) {
                a.0 += v.0 * e;
                a.1 += v.1 * e;
            }
        }
        let scale = radius / nodes as f64;
        for (o, a) in out[ci].iter_mut().zip(acc) {
            *o = (a.0 * scale, a.1 * scale);
        }
    }
    Ok(out)
}

/// Principal-pole term `inc psi_E(x) e^{-i k^2 t / 2}`, `[channel][x]`.
pub fn principal_term(batch: &LaplaceBatch, states: &[FNSolution], xs: &[f64], t: f64) -> Grid {
    batch
        .channels()
        .iter()
        .zip(states)
        .map(|(ch, st)| {
            let phase = (ch.pole() * t).exp() * ch.incident;
            xs.iter()
                .map(|&x| {
                    let (v, d) = st.eval(x);
                    (phase * v, phase * d)
                })
                .collect()
        })
        .collect()
}

/// Sum of resonance-pole residues times `e^{p_n t}`.
pub fn resonance_sum(batch: &LaplaceBatch, poles: &[Pole], xs: &[f64], t: f64) -> Result<Grid> {
    let mut out = zeros(batch.channels().len(), xs.len());
    for pole in poles {
        let factor = (pole.location * t).exp();
        let res = batch.pole_residue(pole.location, xs)?;
        for (o, r) in out.iter_mut().zip(res) {
            for (a, b) in o.iter_mut().zip(r) {
                a.0 += factor * b.0;
                a.1 += factor * b.1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutOptions {
    /// Depth `a` of the followed cut, `p in [-a, 0]`; `None` picks it from
    /// `t` and the requested positions.
    pub depth: Option<f64>,
    pub max_depth: f64,
    /// Required decay exponent of the neglected closing segment.
    pub margin: f64,
    pub rel_tol: f64,
    pub start_nodes: usize,
    pub max_nodes: usize,
    /// Upper limit of `s = alpha sqrt(t)`, where `e^{-s^2}` is negligible.
    pub s_max: f64,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self {
            depth: None,
            max_depth: 1.5,
            margin: 30.0,
            rel_tol: 1e-8,
            start_nodes: 32,
            max_nodes: 1024,
            s_max: 8.0,
        }
    }
}

/// Log-size of the closing segment on `Re p = -a`: `e^{-a t}` against the
/// growth `e^{a sqrt(2x/E)}` of `phi_p(x)/phi_p(0)` and `e^{a^2/(2 E kappa)}`
/// of the tail integral.
fn closing_exponent(a: f64, t: f64, field: f64, kappa: f64, x: f64) -> f64 {
    -a * t + a * a / (2.0 * field * kappa) + a * (2.0 * x.max(0.0) / field).sqrt()
}

impl CutOptions {
    /// Cut depth for time `t` at positions `xs`, or an error when no depth
    /// makes the closing segment negligible (the signal has not yet reached
    /// the farthest `x` in the sense of this estimate).
    pub fn depth_for(&self, batch: &LaplaceBatch, xs: &[f64], t: f64) -> Result<f64> {
        let field = batch.region().field;
        let kappa = batch.channels().iter().map(|c| c.kappa).fold(f64::INFINITY, f64::min);
        let x = xs.iter().cloned().fold(0.0, f64::max);
        let reach = (2.0 * x / field).sqrt();
        let a = match self.depth {
            Some(a) => a,
            None => (field * kappa * (t - reach)).min(self.max_depth),
        };
        let exponent = closing_exponent(a, t, field, kappa, x);
        if !(a > 0.0) || exponent > -self.margin {
            return Err(Error::Contour(format!(
                "t = {t} is too early for the deformed contour at x = {x} (closing segment ~ e^{exponent:.1})"
            )));
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutIntegral {
    pub values: Grid,
    pub depth: f64,
    pub nodes: usize,
    pub change: f64,
}

fn cut_sum(batch: &LaplaceBatch, xs: &[f64], t: f64, upper: f64, n: usize) -> Result<Grid> {
    let (nodes, weights) = gauss_legendre_on(n, 0.0, upper);
    let mut out = zeros(batch.channels().len(), xs.len());
    for (s, wt) in nodes.iter().zip(&weights) {
        let p = -s * s / t;
        let jump = batch.cut_jump(p, xs)?;
        let f = wt * s * (-s * s).exp();
        for (o, j) in out.iter_mut().zip(jump) {
            for (a, b) in o.iter_mut().zip(j) {
                a.0 += f * b.0;
                a.1 += f * b.1;
            }
        }
    }
    // (1 / (2 pi i)) * 2 * int alpha e^{-alpha^2 t} jump d alpha, alpha = s / sqrt(t).
    let pre = 1.0 / (Complex64::new(0.0, PI) * t);
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v = (pre * v.0, pre * v.1);
        }
    }
    Ok(out)
}

fn max_change(a: &Grid, b: &Grid) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        let scale = rb.iter().map(|v| v.0.norm().max(v.1.norm())).fold(0.0, f64::max);
        for (va, vb) in ra.iter().zip(rb) {
            let floor = 1e-6 * scale;
            let d0 = (va.0 - vb.0).norm() / vb.0.norm().max(floor).max(f64::MIN_POSITIVE);
            let d1 = (va.1 - vb.1).norm() / vb.1.norm().max(floor).max(f64::MIN_POSITIVE);
            worst = worst.max(d0).max(d1);
        }
    }
    worst
}

/// Branch-cut contribution at time `t`, `[channel][x]`, by Gauss–Legendre in
/// `s = alpha sqrt(t)` with node doubling.
pub fn branch_cut(batch: &LaplaceBatch, xs: &[f64], t: f64, opts: &CutOptions) -> Result<CutIntegral> {
    if !(t > 0.0) {
        return Err(Error::Contour(format!("branch cut needs t > 0, got {t}")));
    }
    let depth = opts.depth_for(batch, xs, t)?;
    let upper = (depth * t).sqrt().min(opts.s_max);
    let mut n = opts.start_nodes;
    let mut last = cut_sum(batch, xs, t, upper, n)?;
    loop {
        n *= 2;
        let next = cut_sum(batch, xs, t, upper, n)?;
        let change = max_change(&last, &next);
        if change <= opts.rel_tol {
            return Ok(CutIntegral {
                values: next,
                depth,
                nodes: n,
                change,
            });
        }
        if n >= opts.max_nodes {
            return Err(Error::Quadrature {
                lower: 0.0,
                upper,
                estimate: change,
                subdivisions: n,
            });
        }
        last = next;
    }
}

/// `psi(x, t)` from the deformed contour.
#[derive(Debug, Clone)]
pub struct DeformedContour {
    /// Candidate poles, searched at least to `Re p = -max_depth`; those right
    /// of the cut depth at each `t` are used.
    pub poles: Vec<Pole>,
    pub cut: CutOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub principal: Grid,
    pub resonances: Grid,
    pub cut: Grid,
}

impl Decomposition {
    pub fn total(&self) -> Grid {
        self.principal
            .iter()
            .zip(&self.resonances)
            .zip(&self.cut)
            .map(|((a, b), c)| {
                a.iter()
                    .zip(b)
                    .zip(c)
                    .map(|((a, b), c)| (a.0 + b.0 + c.0, a.1 + b.1 + c.1))
                    .collect()
            })
            .collect()
    }

    /// Everything except the principal term.
    pub fn transient(&self) -> Grid {
        self.resonances
            .iter()
            .zip(&self.cut)
            .map(|(b, c)| b.iter().zip(c).map(|(b, c)| (b.0 + c.0, b.1 + c.1)).collect())
            .collect()
    }
}

impl DeformedContour {
    pub fn new(poles: &[Pole], cut: CutOptions) -> Self {
        Self {
            poles: poles.to_vec(),
            cut,
        }
    }

    pub fn decompose(&self, batch: &LaplaceBatch, states: &[FNSolution], xs: &[f64], t: f64) -> Result<Decomposition> {
        let cut = branch_cut(batch, xs, t, &self.cut)?;
        let poles: Vec<Pole> = self.poles.iter().filter(|p| p.location.re > -cut.depth).copied().collect();
        Ok(Decomposition {
            principal: principal_term(batch, states, xs, t),
            resonances: resonance_sum(batch, &poles, xs, t)?,
            cut: cut.values,
        })
    }
}
