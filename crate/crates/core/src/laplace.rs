//! Closed-form Laplace transform of the wave function.
//!
//! For `x < 0` the transform is `C1 e^{w x}` plus the free responses to the
//! incident and reflected waves; for `x > 0` it is `C2 phi_p(x)` plus the
//! Green-function response to the transmitted wave. `w = sqrt(-2ip)` carries
//! the only branch cut, along the negative real `p` axis.
//!
//! Internally everything in the field region is normalised by `phi_p(0)`:
//! with `L = phi'(0)/phi(0)` the matching system has determinant `w - L`,
//! whose zeros are the resonance poles.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::airy::FieldRegion;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};
use crate::scaled::Scaled;
use crate::stationary::step_solve;
use crate::units::PhysicalParams;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which limit of `sqrt(-2ip)` to take on the negative real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Off the cut only; evaluating on the cut is an error.
    Principal,
    /// `p = -s + i0`.
    Upper,
    /// `p = -s - i0`.
    Lower,
}

fn on_cut(p: Complex64) -> bool {
    p.im == 0.0 && p.re < 0.0
}

/// `sqrt(-2ip) = e^{-i pi/4} sqrt(2p)` with the cut on the negative real axis.
pub fn sqrt_branch(p: Complex64) -> Result<Complex64> {
    sqrt_branch_side(p, Side::Principal)
}

pub fn sqrt_branch_side(p: Complex64, side: Side) -> Result<Complex64> {
    let rot = Complex64::from_polar(1.0, -FRAC_PI_4);
    if on_cut(p) {
        let root = (-2.0 * p.re).sqrt();
        return match side {
            Side::Principal => Err(Error::OnBranchCut(p)),
            Side::Upper => Ok(rot * I * root),
            Side::Lower => Ok(-rot * I * root),
        };
    }
    Ok(rot * (2.0 * p).sqrt())
}

/// Selection of the three pieces of the initial wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub include_incident: bool,
    /// Reflected amplitude; `None` selects the step value `R0`.
    pub reflected: Option<Complex64>,
    /// Transmitted amplitude; `None` selects the step value `T0`.
    pub transmitted: Option<Complex64>,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            include_incident: true,
            reflected: None,
            transmitted: None,
        }
    }
}

impl InitialCondition {
    /// Incident wave only; reflected and transmitted pieces dropped.
    pub fn incident_only() -> Self {
        Self {
            include_incident: true,
            reflected: Some(ZERO),
            transmitted: Some(ZERO),
        }
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// One incident wavevector with its resolved initial amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub k: f64,
    pub kappa: f64,
    pub incident: Complex64,
    pub reflected: Complex64,
    pub transmitted: Complex64,
}

impl Channel {
    pub fn new(params: &PhysicalParams, init: &InitialCondition) -> Result<Self> {
        let step = step_solve(params)?;
        Ok(Self {
            k: params.k,
            kappa: step.kappa,
            incident: if init.include_incident { ONE } else { ZERO },
            reflected: init.reflected.unwrap_or(step.r0),
            transmitted: init.transmitted.unwrap_or(step.t0),
        })
    }

    /// `psi(x, 0)` and its x-derivative (right limit at `x = 0`).
    pub fn initial_value(&self, x: f64) -> (Complex64, Complex64) {
        if x < 0.0 {
            let e = (I * self.k * x).exp();
            let er = e.conj();
            (
                self.incident * e + self.reflected * er,
                I * self.k * (self.incident * e - self.reflected * er),
            )
        } else {
            let d = (-self.kappa * x).exp();
            (self.transmitted * d, -self.kappa * self.transmitted * d)
        }
    }

    /// `H psi(x, 0)` and its x-derivative, with `H = -1/2 d^2/dx^2 + V(x)`.
    pub fn hamiltonian_initial(&self, field: f64, x: f64) -> (Complex64, Complex64) {
        let (v, d) = self.initial_value(x);
        let e = 0.5 * self.k * self.k;
        if x < 0.0 {
            (e * v, e * d)
        } else {
            ((e - field * x) * v, (e - field * x) * d - field * v)
        }
    }

    fn q(&self, p: Complex64) -> Complex64 {
        self.k * self.k - 2.0 * I * p
    }

    /// Principal pole `-i k^2/2`.
    pub fn pole(&self) -> Complex64 {
        Complex64::new(0.0, -0.5 * self.k * self.k)
    }
}

/// Value and x-derivative of a transform at one point.
pub type ValueDerivative = (Complex64, Complex64);

/// k-independent data at the surface for one `p`.
#[derive(Debug, Clone, Copy)]
struct Surface {
    w: Complex64,
    log_d: Complex64,
    /// `phi(0) eta(0)` and `phi(0) eta'(0)`: moderate even when each factor is not.
    phi0_eta0: Complex64,
    phi0_eta0p: Complex64,
    phi0: Scaled,
}

/// Per-channel matching data at one `p`.
#[derive(Debug, Clone, Copy)]
struct Matched {
    q: Complex64,
    r1: Complex64,
    r2: Complex64,
    /// `C1`.
    c1: Complex64,
    /// `C2 phi(0)`.
    c2n: Complex64,
}

/// Coefficients of the continuity system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matching {
    pub c1: Complex64,
    /// `C2`, scaled because it carries `1/phi(0)`.
    pub c2: Scaled,
    /// `C2 phi(0)`.
    pub c2_normalized: Complex64,
    /// `w - phi'(0)/phi(0)`.
    pub determinant: Complex64,
}

/// Evaluator of the transform for several incident wavevectors sharing one
/// barrier, field and `p`. Airy evaluations are shared across channels.
#[derive(Debug, Clone)]
pub struct LaplaceBatch {
    region: FieldRegion,
    channels: Vec<Channel>,
    opts: QuadOptions,
    panel: f64,
}

/// Results of the y-quadratures for one `p`, shared by all requested x.
struct Integrals {
    /// Per channel: `int_0^inf phi(y)/phi(0) e^{-kappa y} dy`.
    tail: Vec<Complex64>,
    /// Per x (positive ones), per channel: the Green-function response
    /// `F_T(x)` and `F_T'(x)`.
    response: Vec<Option<Vec<ValueDerivative>>>,
}

impl LaplaceBatch {
    pub fn new(barrier: f64, field: f64, channels: Vec<Channel>, opts: QuadOptions) -> Result<Self> {
        let region = FieldRegion::new(barrier, field)?;
        if channels.is_empty() {
            return Err(Error::InvalidParameter("no channels".into()));
        }
        let kappa_min = channels.iter().map(|c| c.kappa).fold(f64::INFINITY, f64::min);
        if !(kappa_min > 0.0) {
            return Err(Error::NotTunneling {
                energy: barrier,
                barrier,
            });
        }
        let panel = (8.0 / kappa_min).clamp(2.0, 40.0);
        Ok(Self {
            region,
            channels,
            opts,
            panel,
        })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn region(&self) -> &FieldRegion {
        &self.region
    }

    pub fn options(&self) -> &QuadOptions {
        &self.opts
    }

    /// Quadrature options at `p`. Products like `phi(x) eta(y)` are formed by
    /// adding Airy exponents of size `|z|^{3/2}`, which carry an absolute
    /// rounding error of about `eps |z|^{3/2}`; tolerances below that floor
    /// cannot be met and are raised to it.
    fn options_at(&self, p: Complex64) -> QuadOptions {
        let z = self.region.phi_argument(0.0, p);
        let floor = 16.0 * f64::EPSILON * (1.0 + z.norm().powf(1.5));
        QuadOptions {
            rel_tol: self.opts.rel_tol.max(floor),
            ..self.opts
        }
    }

    fn surface(&self, p: Complex64, side: Side) -> Result<Surface> {
        let w = sqrt_branch_side(p, side)?;
        let phi = self.region.phi(0.0, p);
        let eta = self.region.eta(0.0, p);
        let phi0 = phi.value();
        Ok(Surface {
            w,
            log_d: phi.log_derivative(),
            phi0_eta0: phi0.mul(eta.value()).value(),
            phi0_eta0p: phi0.mul(eta.derivative()).value(),
            phi0,
        })
    }

    fn integrals(&self, p: Complex64, xs: &[f64], phi0: Scaled) -> Result<Integrals> {
        let n = self.channels.len();
        let kappas: Vec<f64> = self.channels.iter().map(|c| c.kappa).collect();
        let green = self.region.green_prefactor();
        let opts = self.options_at(p);
        let mut tail: Option<Vec<Complex64>> = None;
        let mut response = Vec::with_capacity(xs.len());
        for &x in xs {
            if x < 0.0 {
                response.push(None);
                continue;
            }
            let at_x = self.region.solutions(x, p);
            let (phi_x, dphi_x, eta_x, deta_x) = (at_x.phi(), at_x.phi_prime(), at_x.eta(), at_x.eta_prime());
            // [0, x]: phi(x) eta(y), phi'(x) eta(y), phi(y)/phi(0), each times e^{-kappa y}.
            let near = if x > 0.0 {
                integrate(
                    |y, out: &mut [Complex64]| {
                        let s = self.region.solutions(y, p);
                        let (eta_y, phi_y) = (s.eta(), s.phi());
                        let a = phi_x.mul(eta_y).value();
                        let b = dphi_x.mul(eta_y).value();
                        let c = phi_y.div(phi0).value();
                        for (i, kappa) in kappas.iter().enumerate() {
                            let damp = (-kappa * y).exp();
                            out[3 * i] = a * damp;
                            out[3 * i + 1] = b * damp;
                            out[3 * i + 2] = c * damp;
                        }
                    },
                    0.0,
                    x,
                    3 * n,
                    &opts,
                )?
                .value
            } else {
                vec![ZERO; 3 * n]
            };
            // [x, inf): phi(y)/phi(x) e^{-kappa (y - x)}.
            let far = integrate_to_infinity(
                |y, out: &mut [Complex64]| {
                    let ratio = self.region.phi(y, p).value().div(phi_x).value();
                    for (i, kappa) in kappas.iter().enumerate() {
                        out[i] = ratio * (-kappa * (y - x)).exp();
                    }
                },
                x,
                self.panel,
                n,
                &opts,
            )?
            .value;
            let phi_eta = phi_x.mul(eta_x).value();
            let dphi_eta = phi_x.mul(deta_x).value();
            let phi_ratio = phi_x.div(phi0).value();
            let mut per_channel = Vec::with_capacity(n);
            let mut tails = Vec::with_capacity(n);
            for i in 0..n {
                let damp = (-kappas[i] * x).exp();
                let value = green * (near[3 * i] + phi_eta * damp * far[i]);
                let deriv = green * (near[3 * i + 1] + dphi_eta * damp * far[i]);
                per_channel.push((value, deriv));
                tails.push(near[3 * i + 2] + phi_ratio * damp * far[i]);
            }
            if tail.is_none() {
                tail = Some(tails);
            }
            response.push(Some(per_channel));
        }
        let tail = match tail {
            Some(t) => t,
            None => self.tail_normalized(p, phi0)?,
        };
        Ok(Integrals { tail, response })
    }

    fn tail_normalized(&self, p: Complex64, phi0: Scaled) -> Result<Vec<Complex64>> {
        let kappas: Vec<f64> = self.channels.iter().map(|c| c.kappa).collect();
        Ok(integrate_to_infinity(
            |y, out: &mut [Complex64]| {
                let ratio = self.region.phi(y, p).value().div(phi0).value();
                for (i, kappa) in kappas.iter().enumerate() {
                    out[i] = ratio * (-kappa * y).exp();
                }
            },
            0.0,
            self.panel,
            self.channels.len(),
            &self.options_at(p),
        )?
        .value)
    }

    /// `int_0^inf phi_p(y) e^{-kappa y} dy` per channel.
    pub fn tail_integral(&self, p: Complex64) -> Result<Vec<Scaled>> {
        let phi0 = self.region.phi(0.0, p).value();
        let t = self.tail_normalized(p, phi0)?;
        Ok(t.into_iter().map(|v| phi0.scale(v)).collect())
    }

    fn match_channel(&self, ch: &Channel, s: &Surface, tail: Complex64, p: Complex64) -> Result<Matched> {
        let q = ch.q(p);
        if q.norm() <= 1e-14 * ch.k * ch.k {
            return Err(Error::NearPole { p, denominator: q.norm() });
        }
        let green = self.region.green_prefactor();
        let a_left = -2.0 * I * (ch.incident + ch.reflected) / q;
        let b_left = 2.0 * ch.k * (ch.incident - ch.reflected) / q;
        let ft0 = green * s.phi0_eta0 * tail;
        let dft0 = green * s.phi0_eta0p * tail;
        let r1 = ch.transmitted * ft0 - a_left;
        let r2 = ch.transmitted * dft0 - b_left;
        // C1 - C2n = r1, w C1 - L C2n = r2.
        let det = s.w - s.log_d;
        let scale = s.w.norm() + s.log_d.norm();
        if det.norm() <= 1e-13 * scale {
            return Err(Error::NearPole { p, denominator: det.norm() });
        }
        let c1 = (r2 - s.log_d * r1) / det;
        let c2n = (r2 - s.w * r1) / det;
        Ok(Matched { q, r1, r2, c1, c2n })
    }

    /// Value and x-derivative of the transform, indexed `[channel][x]`.
    pub fn eval(&self, p: Complex64, side: Side, xs: &[f64]) -> Result<Vec<Vec<ValueDerivative>>> {
        let s = self.surface(p, side)?;
        let ints = self.integrals(p, xs, s.phi0)?;
        let mut out = Vec::with_capacity(self.channels.len());
        for (ci, ch) in self.channels.iter().enumerate() {
            let m = self.match_channel(ch, &s, ints.tail[ci], p)?;
            let mut row = Vec::with_capacity(xs.len());
            for (xi, &x) in xs.iter().enumerate() {
                if x < 0.0 {
                    let e = (I * ch.k * x).exp();
                    let er = e.conj();
                    let h = (s.w * x).exp();
                    let v = m.c1 * h - 2.0 * I * (ch.incident * e + ch.reflected * er) / m.q;
                    let d = s.w * m.c1 * h + 2.0 * ch.k * (ch.incident * e - ch.reflected * er) / m.q;
                    row.push((v, d));
                } else {
                    let at_x = self.region.phi(x, p);
                    let ratio = at_x.value().div(s.phi0).value();
                    let dratio = at_x.derivative().div(s.phi0).value();
                    let (ft, dft) = ints.response[xi].as_ref().expect("positive x has a response")[ci];
                    row.push((
                        m.c2n * ratio + ch.transmitted * ft,
                        m.c2n * dratio + ch.transmitted * dft,
                    ));
                }
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Jump `psi_hat(p - i0) - psi_hat(p + i0)` across the cut at real `p < 0`,
    /// indexed `[channel][x]`. Computed without differencing the two limits.
    pub fn cut_jump(&self, p: f64, xs: &[f64]) -> Result<Vec<Vec<ValueDerivative>>> {
        if !(p < 0.0) {
            return Err(Error::InvalidParameter(format!("cut jump needs p < 0, got {p}")));
        }
        let pc = Complex64::new(p, 0.0);
        let s = self.surface(pc, Side::Upper)?;
        let tail = self.tail_normalized(pc, s.phi0)?;
        let w = s.w;
        let l = s.log_d;
        let denom = l * l - w * w;
        let mut out = Vec::with_capacity(self.channels.len());
        for (ci, ch) in self.channels.iter().enumerate() {
            let m = self.match_channel(ch, &s, tail[ci], pc)?;
            let nu = m.r2 - l * m.r1;
            let mut row = Vec::with_capacity(xs.len());
            for &x in xs {
                if x < 0.0 {
                    let (ch_, sh) = ((w * x).cosh(), (w * x).sinh());
                    let v = nu * 2.0 * (w * ch_ + l * sh) / denom;
                    // d/dx of 2 (w cosh(wx) + L sinh(wx))
                    let d = nu * 2.0 * w * (w * sh + l * ch_) / denom;
                    row.push((v, d));
                } else {
                    let at_x = self.region.phi(x, pc);
                    let ratio = at_x.value().div(s.phi0).value();
                    let dratio = at_x.derivative().div(s.phi0).value();
                    let f = nu * 2.0 * w / denom;
                    row.push((f * ratio, f * dratio));
                }
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Normalised determinant `w(p) - phi'(0)/phi(0)` and its p-derivative.
    pub fn determinant(&self, p: Complex64, side: Side) -> Result<(Complex64, Complex64)> {
        let w = sqrt_branch_side(p, side)?;
        let (l, dl) = self.region.surface_log_derivative(p);
        Ok((w - l, -I / w - dl))
    }

    /// Residue of the transform at a resonance pole (a zero of the
    /// determinant), indexed `[channel][x]`.
    pub fn pole_residue(&self, pole: Complex64, xs: &[f64]) -> Result<Vec<Vec<ValueDerivative>>> {
        let s = self.surface(pole, Side::Principal)?;
        let (_, dd) = self.determinant(pole, Side::Principal)?;
        let tail = self.tail_normalized(pole, s.phi0)?;
        let green = self.region.green_prefactor();
        let mut out = Vec::with_capacity(self.channels.len());
        for (ci, ch) in self.channels.iter().enumerate() {
            let q = ch.q(pole);
            let a_left = -2.0 * I * (ch.incident + ch.reflected) / q;
            let b_left = 2.0 * ch.k * (ch.incident - ch.reflected) / q;
            let r1 = ch.transmitted * green * s.phi0_eta0 * tail[ci] - a_left;
            let r2 = ch.transmitted * green * s.phi0_eta0p * tail[ci] - b_left;
            let amp = (r2 - s.log_d * r1) / dd;
            let mut row = Vec::with_capacity(xs.len());
            for &x in xs {
                if x < 0.0 {
                    let h = (s.w * x).exp();
                    row.push((amp * h, amp * s.w * h));
                } else {
                    let at_x = self.region.phi(x, pole);
                    let ratio = at_x.value().div(s.phi0).value();
                    let dratio = at_x.derivative().div(s.phi0).value();
                    row.push((amp * ratio, amp * dratio));
                }
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Leading small-`alpha` coefficient of the cut jump: with `p = -alpha^2`
    /// on the upper side, `jump = 2 sqrt(2) e^{i pi/4} alpha * g + O(alpha^3)`.
    /// Returns `g` per channel per x.
    pub fn cut_jump_slope(&self, xs: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        let p0 = ZERO;
        let phi = self.region.phi(0.0, p0);
        let eta = self.region.eta(0.0, p0);
        let phi0 = phi.value();
        let l = phi.log_derivative();
        let s = Surface {
            w: ZERO,
            log_d: l,
            phi0_eta0: phi0.mul(eta.value()).value(),
            phi0_eta0p: phi0.mul(eta.derivative()).value(),
            phi0,
        };
        let tail = self.tail_normalized(p0, phi0)?;
        let mut out = Vec::with_capacity(self.channels.len());
        for (ci, ch) in self.channels.iter().enumerate() {
            let m = self.match_channel(ch, &s, tail[ci], p0)?;
            let nu = m.r2 - l * m.r1;
            let row = xs
                .iter()
                .map(|&x| {
                    let shape = if x < 0.0 {
                        1.0 + l * x
                    } else {
                        self.region.phi(x, p0).value().div(phi0).value()
                    };
                    nu * shape / (l * l)
                })
                .collect();
            out.push(row);
        }
        Ok(out)
    }
}

/// Single-channel evaluator.
#[derive(Debug, Clone)]
pub struct LaplaceEvaluator {
    pub params: PhysicalParams,
    pub init: InitialCondition,
    batch: LaplaceBatch,
}

impl LaplaceEvaluator {
    pub fn new(params: PhysicalParams, init: InitialCondition, opts: QuadOptions) -> Result<Self> {
        params.require_field()?;
        let channel = Channel::new(&params, &init)?;
        let batch = LaplaceBatch::new(params.barrier, params.field, vec![channel], opts)?;
        Ok(Self { params, init, batch })
    }

    pub fn with_defaults(params: PhysicalParams) -> Result<Self> {
        Self::new(params, InitialCondition::default(), QuadOptions::default())
    }

    pub fn batch(&self) -> &LaplaceBatch {
        &self.batch
    }

    pub fn channel(&self) -> &Channel {
        &self.batch.channels[0]
    }

    pub fn psi_hat(&self, x: f64, p: Complex64) -> Result<ValueDerivative> {
        self.psi_hat_side(x, p, Side::Principal)
    }

    pub fn psi_hat_side(&self, x: f64, p: Complex64, side: Side) -> Result<ValueDerivative> {
        Ok(self.batch.eval(p, side, &[x])?[0][0])
    }

    pub fn psi_hat_many(&self, xs: &[f64], p: Complex64, side: Side) -> Result<Vec<ValueDerivative>> {
        Ok(self.batch.eval(p, side, xs)?.swap_remove(0))
    }

    /// `int_0^inf phi_p(y) e^{-kappa y} dy`.
    pub fn tail_integral(&self, p: Complex64) -> Result<Scaled> {
        Ok(self.batch.tail_integral(p)?[0])
    }

    /// Coefficients `C1`, `C2` of the continuity system at `x = 0`.
    pub fn matching(&self, p: Complex64, side: Side) -> Result<Matching> {
        let s = self.batch.surface(p, side)?;
        let tail = self.batch.tail_normalized(p, s.phi0)?;
        let m = self.batch.match_channel(self.channel(), &s, tail[0], p)?;
        Ok(Matching {
            c1: m.c1,
            c2: Scaled::from_value(m.c2n).div(s.phi0),
            c2_normalized: m.c2n,
            determinant: s.w - s.log_d,
        })
    }

    /// The free responses `F_I`, `F_R` (defined for x < 0) and the Green
    /// response `F_T` (defined for x > 0) at one point. Terms outside their
    /// domain are returned as zero.
    pub fn f_terms(&self, x: f64, p: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
        let ch = *self.channel();
        let q = ch.q(p);
        if x < 0.0 {
            if q.norm() <= 1e-14 * ch.k * ch.k {
                return Err(Error::NearPole { p, denominator: q.norm() });
            }
            let e = (I * ch.k * x).exp();
            return Ok((-2.0 * I * e / q, -2.0 * I * e.conj() / q, ZERO));
        }
        let phi0 = self.batch.region.phi(0.0, p).value();
        let ints = self.batch.integrals(p, &[x], phi0)?;
        let ft = ints.response[0].as_ref().expect("x >= 0")[0].0;
        Ok((ZERO, ZERO, ft))
    }

    /// F_T and its derivative at `x >= 0`.
    pub fn transmitted_response(&self, x: f64, p: Complex64) -> Result<ValueDerivative> {
        if x < 0.0 {
            return Err(Error::InvalidParameter("F_T is defined for x >= 0".into()));
        }
        let phi0 = self.batch.region.phi(0.0, p).value();
        let ints = self.batch.integrals(p, &[x], phi0)?;
        Ok(ints.response[0].as_ref().expect("x >= 0")[0])
    }

    pub fn initial_value(&self, x: f64) -> ValueDerivative {
        self.channel().initial_value(x)
    }
}
