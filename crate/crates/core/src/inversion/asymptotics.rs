//! Leading long-time behaviour: `psi - e^{-ik^2t/2} psi_E ~ (t / tau_E)^{-3/2}`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::airy::FieldRegion;
use crate::error::{Error, Result};
use crate::laplace::{Channel, InitialCondition, LaplaceBatch};
use crate::quadrature::{integrate_to_infinity, QuadOptions};
use crate::units::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoeffs {
    pub c_e: Complex64,
    /// `tau_E(x)` (au-time), principal 2/3 power.
    pub tau_e: Complex64,
    /// `c_E phi_0(x)` for x > 0, `c_E (phi_0(0) + x phi_0'(0))` for x < 0.
    pub amplitude: Complex64,
}

/// `-i sqrt(2) e^{i pi/4} / (2 sqrt(pi))`: Watson's lemma factor turning the
/// small-alpha slope of the cut jump into the `t^{-3/2}` amplitude.
fn watson_factor() -> Complex64 {
    -Complex64::i() * Complex64::from_polar(2f64.sqrt(), FRAC_PI_4) / (2.0 * PI.sqrt())
}

/// `t^{3/2}` times the branch-cut term as `t -> infinity`, `[channel][x]`,
/// for any initial condition.
pub fn watson_amplitude(batch: &LaplaceBatch, xs: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let k = watson_factor();
    Ok(batch
        .cut_jump_slope(xs)?
        .into_iter()
        .map(|row| row.into_iter().map(|g| k * g).collect())
        .collect())
}

/// `c_E` in closed form for the step initial condition.
pub fn c_e_closed_form(params: &PhysicalParams) -> Result<Complex64> {
    params.require_tunneling()?;
    let region = FieldRegion::from_params(params)?;
    let channel = Channel::new(params, &InitialCondition::default())?;
    let p0 = Complex64::new(0.0, 0.0);
    let phi = region.phi(0.0, p0);
    let (phi0, dphi0) = (phi.value().value(), phi.derivative().value());
    if dphi0.norm() == 0.0 || !dphi0.is_finite() {
        return Err(Error::InvalidParameter("phi_0'(0) vanishes or overflows".into()));
    }
    let kappa = channel.kappa;
    let k2 = params.k * params.k;
    let panel = (8.0 / kappa).clamp(2.0, 40.0);
    let tail = integrate_to_infinity(
        |y, out: &mut [Complex64]| out[0] = region.phi(y, p0).value().value() * (-kappa * y).exp(),
        0.0,
        panel,
        1,
        &QuadOptions::default(),
    )?
    .value[0];
    let pre = -Complex64::from_polar(2f64.sqrt(), FRAC_PI_4) * channel.transmitted / (PI.sqrt() * dphi0 * dphi0);
    Ok(pre * ((kappa * phi0 + dphi0) / k2 + tail))
}

/// `c_E` for an arbitrary initial condition: the Watson amplitude at `x = 0`
/// divided by `phi_0(0)`.
pub fn c_e_general(params: &PhysicalParams, init: &InitialCondition) -> Result<Complex64> {
    let channel = Channel::new(params, init)?;
    let batch = LaplaceBatch::new(params.barrier, params.field, vec![channel], QuadOptions::default())?;
    let amp = watson_amplitude(&batch, &[0.0])?[0][0];
    let phi0 = batch.region().phi(0.0, Complex64::new(0.0, 0.0)).value().value();
    Ok(amp / phi0)
}

/// `c_E` and `tau_E(x)`; the closed form is used for the step initial
/// condition and the general Watson amplitude otherwise.
pub fn asymptotics(params: &PhysicalParams, init: &InitialCondition, x: f64) -> Result<AsymptoticCoeffs> {
    let c_e = if init.is_default() {
        c_e_closed_form(params)?
    } else {
        c_e_general(params, init)?
    };
    let region = FieldRegion::from_params(params)?;
    let p0 = Complex64::new(0.0, 0.0);
    let shape = if x < 0.0 {
        let phi = region.phi(0.0, p0);
        phi.value().value() + x * phi.derivative().value()
    } else {
        region.phi(x, p0).value().value()
    };
    let amplitude = c_e * shape;
    Ok(AsymptoticCoeffs {
        c_e,
        tau_e: amplitude.powf(2.0 / 3.0),
        amplitude,
    })
}
