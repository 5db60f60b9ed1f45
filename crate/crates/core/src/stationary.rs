//! Stationary states: the zero-field step eigenfunction and the field-emission
//! (Fowler–Nordheim) scattering state, with the tunneling probability and the
//! field dependence of the steady current.

use num_complex::Complex64;

use crate::airy::FieldRegion;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::scaled::Scaled;
use crate::units::PhysicalParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `i (psi dpsi* - psi* dpsi) = 2 Im(psi* dpsi)`.
pub fn probability_current(psi: Complex64, dpsi: Complex64) -> f64 {
    2.0 * (psi.conj() * dpsi).im
}

/// Stationary state of the zero-field step at energy `k^2/2 < U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSolution {
    pub k: f64,
    pub kappa: f64,
    pub r0: Complex64,
    pub t0: Complex64,
}

impl StepSolution {
    /// Value and x-derivative of the step eigenfunction.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        if x < 0.0 {
            let e = (I * self.k * x).exp();
            let er = e.conj();
            (e + self.r0 * er, I * self.k * (e - self.r0 * er))
        } else {
            let d = (-self.kappa * x).exp();
            (self.t0 * d, -self.kappa * self.t0 * d)
        }
    }
}

pub fn step_solve(params: &PhysicalParams) -> Result<StepSolution> {
    params.require_tunneling()?;
    let k = params.k;
    let kappa = params.kappa();
    let r0 = (I * k + kappa) / (I * k - kappa);
    Ok(StepSolution {
        k,
        kappa,
        r0,
        t0: 1.0 + r0,
    })
}

/// Stationary scattering state in the field: `e^{ikx} + R_E e^{-ikx}` for
/// `x < 0`, `T_E Phi(x)` for `x > 0`, with `Phi` the decaying field solution
/// at `p = -i k^2/2`.
#[derive(Debug, Clone)]
pub struct FNSolution {
    pub k: f64,
    pub r_e: Complex64,
    /// `T_E`, scaled because `Phi(0)` may be exponentially small.
    pub t_e: Scaled,
    /// Tunneling probability, from the transmitted flux.
    pub d: f64,
    /// `T_E Phi(0) = 1 + R_E`.
    surface_value: Complex64,
    phi0: Scaled,
    region: FieldRegion,
}

impl FNSolution {
    /// Value and x-derivative of the field-emission state.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        if x < 0.0 {
            let e = (I * self.k * x).exp();
            let er = e.conj();
            (e + self.r_e * er, I * self.k * (e - self.r_e * er))
        } else {
            let phi = self.region.phi(x, self.pole());
            let ratio_v = phi.value().div(self.phi0).value();
            let ratio_d = phi.derivative().div(self.phi0).value();
            (self.surface_value * ratio_v, self.surface_value * ratio_d)
        }
    }

    /// `1 - |R_E|^2`; loses relative accuracy when `D` is tiny.
    pub fn reflection_deficit(&self) -> f64 {
        1.0 - self.r_e.norm_sqr()
    }

    /// Location of the principal pole, `-i k^2/2`.
    pub fn pole(&self) -> Complex64 {
        Complex64::new(0.0, -0.5 * self.k * self.k)
    }

    /// `Phi'(0)/Phi(0)`.
    pub fn surface_log_derivative(&self) -> Complex64 {
        let phi = self.region.phi(0.0, self.pole());
        phi.log_derivative()
    }
}

pub fn fn_solve(params: &PhysicalParams) -> Result<FNSolution> {
    params.require_tunneling()?;
    let region = FieldRegion::from_params(params)?;
    let k = params.k;
    let pole = Complex64::new(0.0, -0.5 * k * k);
    let phi = region.phi(0.0, pole);
    let log_d = phi.log_derivative();

    // Unknowns (R_E, T_E Phi(0)):  -R + T~ = 1,  ik R + L T~ = ik.
    let m = [[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)], [I * k, log_d]];
    let rhs = [Complex64::new(1.0, 0.0), I * k];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if det.norm() <= 1e-13 * scale * scale {
        return Err(Error::SingularMatching { det: det.norm() });
    }
    let r_e = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let surface_value = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
    let t_e = Scaled::from_value(surface_value).div(phi.value());

    let mut sol = FNSolution {
        k,
        r_e,
        t_e,
        d: 0.0,
        surface_value,
        phi0: phi.value(),
        region,
    };
    // Past the classical turning point the state is an outgoing wave of
    // moderate size, so the flux there has no cancellation.
    let turning = (params.barrier - 0.5 * k * k) / params.field;
    let probe = turning + 2.0 / (2.0 * params.field).cbrt();
    let (v, dv) = sol.eval(probe);
    sol.d = probability_current(v, dv) / (2.0 * k);
    Ok(sol)
}

/// Tunneling probability `D(k)`.
pub fn transmission(params: &PhysicalParams) -> Result<f64> {
    Ok(fn_solve(params)?.d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvPoint {
    /// Field (hartree/bohr).
    pub field: f64,
    /// `int_0^{k_F} k D(k) dk` (bohr^-2).
    pub current: f64,
    /// Gauss–Legendre nodes used at convergence.
    pub nodes: usize,
}

const IV_TOLERANCE: f64 = 1e-8;
const IV_START_NODES: usize = 32;
const IV_MAX_NODES: usize = 2048;

/// Steady supply-integrated current `int_0^{k_F} k D(k) dk` for each field,
/// with Gauss–Legendre node doubling until the relative change is below 1e-8.
pub fn fn_iv_curve(barrier: f64, k_fermi: f64, fields: &[f64]) -> Result<Vec<IvPoint>> {
    if fields.is_empty() {
        return Err(Error::InvalidParameter("field list is empty".into()));
    }
    let base = PhysicalParams::new(barrier, fields[0].max(0.0), k_fermi, k_fermi)?;
    base.require_tunneling()?;
    fields
        .iter()
        .map(|&field| {
            if !(field > 0.0) {
                return Err(Error::InvalidParameter(format!("field {field} must be > 0")));
            }
            let params = base.with_field(field)?;
            let integrate = |n: usize| -> Result<f64> {
                let (ks, ws) = gauss_legendre_on(n, 0.0, k_fermi);
                let mut sum = 0.0;
                for (k, w) in ks.iter().zip(&ws) {
                    sum += w * k * transmission(&params.with_k(*k)?)?;
                }
                Ok(sum)
            };
            let mut nodes = IV_START_NODES;
            let mut last = integrate(nodes)?;
            loop {
                let next = integrate(2 * nodes)?;
                nodes *= 2;
                if (next - last).abs() <= IV_TOLERANCE * next.abs() {
                    return Ok(IvPoint {
                        field,
                        current: next,
                        nodes,
                    });
                }
                if nodes >= IV_MAX_NODES {
                    return Err(Error::Quadrature {
                        lower: 0.0,
                        upper: k_fermi,
                        estimate: (next - last).abs() / next.abs(),
                        subdivisions: nodes,
                    });
                }
                last = next;
            }
        })
        .collect()
}

/// Least-squares line through `ln(J / E^2)` against `1 / E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits the Fowler–Nordheim coordinates of `points`; field and current are
/// taken in whatever units the caller supplies as `(field, current)` pairs.
pub fn fowler_nordheim_fit(points: &[(f64, f64)]) -> Result<FnFit> {
    if points.len() < 3 || points.iter().any(|&(e, j)| !(e > 0.0 && j > 0.0)) {
        return Err(Error::InvalidParameter(
            "Fowler-Nordheim fit needs at least three points with positive field and current".into(),
        ));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(e, j)| (1.0 / e, (j / (e * e)).ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|v| v.0).sum::<f64>() / n;
    let my = xy.iter().map(|v| v.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|v| (v.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    let syy: f64 = xy.iter().map(|v| (v.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(FnFit {
        slope,
        intercept,
        r_squared,
    })
}
