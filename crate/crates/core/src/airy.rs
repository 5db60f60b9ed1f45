//! Complex Airy function Ai and the two field-region solutions built from it.
//!
//! Evaluation strategy:
//! - `|z| < 9.5`: Taylor expansion about the nearest point of the integer
//!   lattice, using a table of (Ai, Ai') at lattice points built once per
//!   process. Table entries come from the Maclaurin series near the origin,
//!   from the asymptotic expansion stepped inward in the recessive sector
//!   `|arg z| < pi/3`, and from the Maclaurin series stepped outward elsewhere.
//!   Each stepping direction follows the growing solution, so no entry is
//!   contaminated by Bi.
//! - `|z| >= 9.5`: the large-argument expansion for `|arg z| <= 2pi/3`, and the
//!   connection formula `Ai(z) = -w Ai(wz) - w^2 Ai(w^2 z)` beyond.
//!
//! Results are returned as a mantissa pair times a shared `exp(exponent)`.

use std::f64::consts::{FRAC_PI_3, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scaled::Scaled;
use crate::units::PhysicalParams;

/// Ai(0).
pub const AI0: f64 = 0.355_028_053_887_817_239_26;
/// -Ai'(0).
pub const NEG_AIP0: f64 = 0.258_819_403_792_806_798_41;

const TAYLOR_RADIUS: f64 = 9.5;
const LATTICE_HALF: i32 = 10;
const MACLAURIN_RADIUS: f64 = 1.5;
const ASYMPTOTIC_START: f64 = 12.0;
const MAX_STEP: f64 = 0.5;
const MAX_ASYMPTOTIC_TERMS: usize = 80;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryPair {
    pub ai: Complex64,
    pub ai_prime: Complex64,
}

/// `Ai = ai * exp(exponent)`, `Ai' = ai_prime * exp(exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledAiry {
    pub ai: Complex64,
    pub ai_prime: Complex64,
    pub exponent: Complex64,
}

impl ScaledAiry {
    pub fn value(&self) -> Scaled {
        Scaled::new(self.ai, self.exponent)
    }

    pub fn derivative(&self) -> Scaled {
        Scaled::new(self.ai_prime, self.exponent)
    }

    pub fn unscaled(&self) -> AiryPair {
        let factor = self.exponent.exp();
        AiryPair {
            ai: self.ai * factor,
            ai_prime: self.ai_prime * factor,
        }
    }

    /// Logarithmic derivative Ai'/Ai, insensitive to the scale.
    pub fn log_derivative(&self) -> Complex64 {
        self.ai_prime / self.ai
    }

    fn combine(a: ScaledAiry, ca: Complex64, cap: Complex64, b: ScaledAiry, cb: Complex64, cbp: Complex64) -> ScaledAiry {
        let (exponent, ra, rb) = if a.exponent.re >= b.exponent.re {
            (a.exponent, Complex64::new(1.0, 0.0), (b.exponent - a.exponent).exp())
        } else {
            (b.exponent, (a.exponent - b.exponent).exp(), Complex64::new(1.0, 0.0))
        };
        ScaledAiry {
            ai: ca * a.ai * ra + cb * b.ai * rb,
            ai_prime: cap * a.ai_prime * ra + cbp * b.ai_prime * rb,
            exponent,
        }
    }
}

/// Ai and Ai' at `z`. Fails only when the value does not fit in an `f64`.
pub fn airy(z: Complex64) -> Result<AiryPair> {
    let scaled = airy_scaled(z);
    if scaled.exponent.re > 700.0 || !scaled.ai.is_finite() {
        return Err(Error::AiryOverflow(z));
    }
    Ok(scaled.unscaled())
}

/// Ai and Ai' at `z` in scaled form; valid for every finite `z`.
pub fn airy_scaled(z: Complex64) -> ScaledAiry {
    if z.norm() < TAYLOR_RADIUS {
        let (ai, ai_prime) = from_table(z);
        ScaledAiry {
            ai,
            ai_prime,
            exponent: ZERO,
        }
    } else {
        asymptotic(z)
    }
}

fn maclaurin(z: Complex64) -> (Complex64, Complex64) {
    let z3 = z * z * z;
    let mut f = Complex64::new(1.0, 0.0);
    let mut g = z;
    let mut fp = ZERO;
    let mut gp = Complex64::new(1.0, 0.0);
    let mut sum_f = f;
    let mut sum_g = g;
    let mut sum_fp = ZERO;
    let mut sum_gp = gp;
    for k in 0..200 {
        let kf = k as f64;
        f *= z3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        g *= z3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        fp = if k == 0 {
            z * z / 2.0
        } else {
            fp * z3 / (3.0 * kf * (3.0 * kf + 2.0))
        };
        gp *= z3 / ((3.0 * kf + 1.0) * (3.0 * kf + 3.0));
        sum_f += f;
        sum_g += g;
        sum_fp += fp;
        sum_gp += gp;
        let tail = f.norm() + g.norm() + fp.norm() + gp.norm();
        if tail <= 1e-18 * (sum_f.norm() + sum_g.norm() + sum_fp.norm() + sum_gp.norm()) {
            break;
        }
    }
    (
        AI0 * sum_f - NEG_AIP0 * sum_g,
        AI0 * sum_fp - NEG_AIP0 * sum_gp,
    )
}

/// Propagates (Ai, Ai') from `z0` to `z0 + h` through the Taylor series of the
/// Airy equation `f'' = z f`.
fn taylor_step(z0: Complex64, ai: Complex64, aip: Complex64, h: Complex64) -> (Complex64, Complex64) {
    // a[n+2] (n+1)(n+2) = z0 a[n] + a[n-1]
    let mut a_prev2 = ZERO; // a[n-1]
    let mut a_prev = ai; // a[n]
    let mut a_cur = aip; // a[n+1]
    let mut hp = Complex64::new(1.0, 0.0); // h^n
    let mut value = ai;
    let mut deriv = aip;
    value += aip * h;
    let mut n = 0usize;
    let mut quiet = 0;
    loop {
        // a[n+2]
        let nf = n as f64;
        let next = (z0 * a_prev + a_prev2) / ((nf + 1.0) * (nf + 2.0));
        hp *= h;
        let term_d = next * (nf + 2.0) * hp; // d/dh a[n+2] h^(n+2)
        let term_v = next * hp * h;
        value += term_v;
        deriv += term_d;
        if term_v.norm() <= 1e-18 * value.norm() && term_d.norm() <= 1e-18 * deriv.norm() {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        a_prev2 = a_prev;
        a_prev = a_cur;
        a_cur = next;
        n += 1;
        if n > 200 {
            break;
        }
    }
    (value, deriv)
}

/// Steps (Ai, Ai') along the straight segment from `from` to `to`.
fn march(from: Complex64, mut ai: Complex64, mut aip: Complex64, to: Complex64) -> (Complex64, Complex64) {
    let delta = to - from;
    let steps = (delta.norm() / MAX_STEP).ceil().max(1.0) as usize;
    let h = delta / steps as f64;
    let mut z = from;
    for _ in 0..steps {
        let (a, ap) = taylor_step(z, ai, aip, h);
        ai = a;
        aip = ap;
        z += h;
    }
    (ai, aip)
}

struct Table {
    entries: Vec<(Complex64, Complex64)>,
}

impl Table {
    fn width() -> usize {
        (2 * LATTICE_HALF + 1) as usize
    }

    fn build() -> Table {
        let w = Self::width();
        let mut entries = Vec::with_capacity(w * w);
        for ib in -LATTICE_HALF..=LATTICE_HALF {
            for ia in -LATTICE_HALF..=LATTICE_HALF {
                let c = Complex64::new(ia as f64, ib as f64);
                entries.push(Self::entry(c));
            }
        }
        Table { entries }
    }

    fn entry(c: Complex64) -> (Complex64, Complex64) {
        let r = c.norm();
        if r <= MACLAURIN_RADIUS {
            return maclaurin(c);
        }
        let dir = c / r;
        if c.arg().abs() < FRAC_PI_3 {
            let start = dir * ASYMPTOTIC_START;
            let a = asymptotic(start).unscaled();
            march(start, a.ai, a.ai_prime, c)
        } else {
            let start = dir * MACLAURIN_RADIUS;
            let (ai, aip) = maclaurin(start);
            march(start, ai, aip, c)
        }
    }

    fn get(&self, ia: i32, ib: i32) -> (Complex64, Complex64) {
        let w = Self::width() as i32;
        let idx = (ib + LATTICE_HALF) * w + (ia + LATTICE_HALF);
        self.entries[idx as usize]
    }
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(Table::build)
}

fn from_table(z: Complex64) -> (Complex64, Complex64) {
    let ia = z.re.round() as i32;
    let ib = z.im.round() as i32;
    let c = Complex64::new(ia as f64, ib as f64);
    let (ai, aip) = table().get(ia, ib);
    let h = z - c;
    if h == ZERO {
        return (ai, aip);
    }
    taylor_step(c, ai, aip, h)
}

fn asymptotic_coefficients() -> &'static [(f64, f64)] {
    static COEFFS: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut out = Vec::with_capacity(MAX_ASYMPTOTIC_TERMS + 1);
        let mut u = 1.0;
        out.push((1.0, 1.0));
        for k in 1..=MAX_ASYMPTOTIC_TERMS {
            let kf = k as f64;
            u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf);
            let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
            out.push((u, v));
        }
        out
    })
}

/// Large-argument expansion valid for `|arg z| <= 2pi/3`.
fn asymptotic_direct(z: Complex64) -> ScaledAiry {
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let inv = -1.0 / zeta;
    let coeffs = asymptotic_coefficients();
    let mut sum_u = Complex64::new(1.0, 0.0);
    let mut sum_v = Complex64::new(1.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for &(u, v) in coeffs.iter().skip(1) {
        power *= inv;
        let tu = u * power;
        let tv = v * power;
        let size = tu.norm().max(tv.norm());
        if size > last {
            break;
        }
        sum_u += tu;
        sum_v += tv;
        last = size;
        if size <= 1e-17 {
            break;
        }
    }
    let quarter = z.sqrt().sqrt();
    let norm = 1.0 / (2.0 * PI.sqrt());
    ScaledAiry {
        ai: sum_u * norm / quarter,
        ai_prime: -sum_v * norm * quarter,
        exponent: -zeta,
    }
}

fn asymptotic(z: Complex64) -> ScaledAiry {
    let arg = z.arg();
    if arg.abs() <= 2.0 * FRAC_PI_3 {
        return asymptotic_direct(z);
    }
    let omega = if arg > 0.0 {
        Complex64::from_polar(1.0, 2.0 * FRAC_PI_3)
    } else {
        Complex64::from_polar(1.0, -2.0 * FRAC_PI_3)
    };
    let omega2 = omega * omega;
    let a = asymptotic_direct(omega * z);
    let b = asymptotic_direct(omega2 * z);
    ScaledAiry::combine(a, -omega, -omega2, b, -omega2, -omega)
}

/// The decaying and growing solutions of `(-1/2 d^2/dx^2 + U - E x - i p) f = 0`
/// at one point, with their x-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSolutionPair {
    pub phi: Complex64,
    pub phi_prime: Complex64,
    pub eta: Complex64,
    pub eta_prime: Complex64,
}

/// Scaled counterpart of [`OdeSolutionPair`]: `phi` and `phi_prime` share
/// `phi_exponent`, `eta` and `eta_prime` share `eta_exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledOdePair {
    pub phi: Complex64,
    pub phi_prime: Complex64,
    pub phi_exponent: Complex64,
    pub eta: Complex64,
    pub eta_prime: Complex64,
    pub eta_exponent: Complex64,
}

impl ScaledOdePair {
    pub fn phi(&self) -> Scaled {
        Scaled::new(self.phi, self.phi_exponent)
    }

    pub fn phi_prime(&self) -> Scaled {
        Scaled::new(self.phi_prime, self.phi_exponent)
    }

    pub fn eta(&self) -> Scaled {
        Scaled::new(self.eta, self.eta_exponent)
    }

    pub fn eta_prime(&self) -> Scaled {
        Scaled::new(self.eta_prime, self.eta_exponent)
    }

    pub fn unscaled(&self) -> OdeSolutionPair {
        let fp = self.phi_exponent.exp();
        let fe = self.eta_exponent.exp();
        OdeSolutionPair {
            phi: self.phi * fp,
            phi_prime: self.phi_prime * fp,
            eta: self.eta * fe,
            eta_prime: self.eta_prime * fe,
        }
    }
}

/// Precomputed constants of the field region for a given `(U, E)`.
#[derive(Debug, Clone, Copy)]
pub struct FieldRegion {
    pub barrier: f64,
    pub field: f64,
    cube_root: f64,
    inv_two_thirds: f64,
    phi_factor: Complex64,
    eta_factor: Complex64,
    eta_phase: Complex64,
}

impl FieldRegion {
    pub fn new(barrier: f64, field: f64) -> Result<Self> {
        if !(field > 0.0) {
            return Err(Error::ZeroField);
        }
        let two_cbrt = 2f64.cbrt();
        let eta_phase = Complex64::from_polar(1.0, -FRAC_PI_3);
        Ok(Self {
            barrier,
            field,
            cube_root: field.cbrt(),
            inv_two_thirds: field.powf(-2.0 / 3.0),
            phi_factor: two_cbrt * eta_phase,
            eta_factor: Complex64::new(-two_cbrt, 0.0),
            eta_phase,
        })
    }

    pub fn from_params(params: &PhysicalParams) -> Result<Self> {
        Self::new(params.barrier, params.field)
    }

    /// `E^(1/3) x - E^(-2/3) (U - i p)`.
    pub fn reduced(&self, x: f64, p: Complex64) -> Complex64 {
        self.cube_root * x - self.inv_two_thirds * (self.barrier - Complex64::i() * p)
    }

    pub fn phi_argument(&self, x: f64, p: Complex64) -> Complex64 {
        self.phi_factor * self.reduced(x, p)
    }

    pub fn eta_argument(&self, x: f64, p: Complex64) -> Complex64 {
        self.eta_factor * self.reduced(x, p)
    }

    /// Decaying solution and its derivative, scaled.
    pub fn phi(&self, x: f64, p: Complex64) -> ScaledAiry {
        let mut a = airy_scaled(self.phi_argument(x, p));
        a.ai_prime *= self.phi_factor * self.cube_root;
        a
    }

    /// Growing solution and its derivative, scaled.
    pub fn eta(&self, x: f64, p: Complex64) -> ScaledAiry {
        let mut a = airy_scaled(self.eta_argument(x, p));
        a.ai *= self.eta_phase;
        a.ai_prime *= self.eta_phase * self.eta_factor * self.cube_root;
        a
    }

    pub fn solutions(&self, x: f64, p: Complex64) -> ScaledOdePair {
        let phi = self.phi(x, p);
        let eta = self.eta(x, p);
        ScaledOdePair {
            phi: phi.ai,
            phi_prime: phi.ai_prime,
            phi_exponent: phi.exponent,
            eta: eta.ai,
            eta_prime: eta.ai_prime,
            eta_exponent: eta.exponent,
        }
    }

    /// `phi'(0)/phi(0)` and its derivative with respect to `p`.
    pub fn surface_log_derivative(&self, p: Complex64) -> (Complex64, Complex64) {
        let z = self.phi_argument(0.0, p);
        let a = airy_scaled(z);
        let q = a.ai_prime / a.ai;
        let chain = self.phi_factor * self.cube_root;
        let dz_dp = Complex64::i() * self.phi_factor * self.inv_two_thirds;
        (chain * q, chain * (z - q * q) * dz_dp)
    }

    /// `phi eta' - phi' eta = -i (2E)^(1/3) / (2 pi)`, independent of x and p.
    pub fn wronskian(&self) -> Complex64 {
        Complex64::new(0.0, -(2.0 * self.field).cbrt() / (2.0 * PI))
    }

    /// `4 pi / (2E)^(1/3)` = `-2i / W`, the Green-function prefactor.
    pub fn green_prefactor(&self) -> f64 {
        4.0 * PI / (2.0 * self.field).cbrt()
    }
}

/// Both field-region solutions at `(x, p)`; requires `E > 0`.
pub fn ode_solutions(x: f64, p: Complex64, params: &PhysicalParams) -> Result<OdeSolutionPair> {
    let region = FieldRegion::from_params(params)?;
    let pair = region.solutions(x, p);
    let out = pair.unscaled();
    if !(out.phi.is_finite() && out.eta.is_finite() && out.phi_prime.is_finite() && out.eta_prime.is_finite()) {
        let z = if pair.phi_exponent.re.abs() > pair.eta_exponent.re.abs() {
            region.phi_argument(x, p)
        } else {
            region.eta_argument(x, p)
        };
        return Err(Error::AiryOverflow(z));
    }
    Ok(out)
}
