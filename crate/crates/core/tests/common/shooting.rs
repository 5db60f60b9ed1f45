//! Reference transmission probability by direct integration of the stationary
//! equation `psi'' = 2 (U - E x - k^2/2) psi` from far outside the barrier
//! back to the surface, with an adaptive Dormand–Prince 5(4) integrator.

use num_complex::Complex64;

type State = [Complex64; 2];

fn rhs(x: f64, y: &State, barrier: f64, field: f64, energy: f64) -> State {
    [y[1], 2.0 * (barrier - field * x - energy) * y[0]]
}

fn axpy(y: &State, h: f64, ks: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in ks {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrates from `x0` to `x1` (either direction) with relative tolerance `tol`.
pub fn integrate(mut y: State, x0: f64, x1: f64, tol: f64, barrier: f64, field: f64, energy: f64) -> State {
    let f = |x: f64, y: &State| rhs(x, y, barrier, field, energy);
    let dir = (x1 - x0).signum();
    let mut x = x0;
    let mut h = 0.01 * dir;
    while (x1 - x) * dir > 0.0 {
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let k1 = f(x, &y);
        let k2 = f(x + h / 5.0, &axpy(&y, h, &[(1.0 / 5.0, &k1)]));
        let k3 = f(x + 3.0 * h / 10.0, &axpy(&y, h, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]));
        let k4 = f(x + 4.0 * h / 5.0, &axpy(&y, h, &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)]));
        let k5 = f(
            x + 8.0 * h / 9.0,
            &axpy(&y, h, &[(19372.0 / 6561.0, &k1), (-25360.0 / 2187.0, &k2), (64448.0 / 6561.0, &k3), (-212.0 / 729.0, &k4)]),
        );
        let k6 = f(
            x + h,
            &axpy(&y, h, &[(9017.0 / 3168.0, &k1), (-355.0 / 33.0, &k2), (46732.0 / 5247.0, &k3), (49.0 / 176.0, &k4), (-5103.0 / 18656.0, &k5)]),
        );
        let y5 = axpy(&y, h, &[(35.0 / 384.0, &k1), (500.0 / 1113.0, &k3), (125.0 / 192.0, &k4), (-2187.0 / 6784.0, &k5), (11.0 / 84.0, &k6)]);
        let k7 = f(x + h, &y5);
        let y4 = axpy(
            &y,
            h,
            &[(5179.0 / 57600.0, &k1), (7571.0 / 16695.0, &k3), (393.0 / 640.0, &k4), (-92097.0 / 339200.0, &k5), (187.0 / 2100.0, &k6), (1.0 / 40.0, &k7)],
        );
        let scale = y5[0].norm().max(y[0].norm()) + y5[1].norm().max(y[1].norm()) * h.abs();
        let err = ((y5[0] - y4[0]).norm() + (y5[1] - y4[1]).norm() * h.abs()) / (tol * scale);
        if err <= 1.0 {
            x += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// Outgoing wave far beyond the turning point, from the large-argument series
/// of `Ai(e^{-i pi/3} u)` with `u = (2E)^{1/3} (x - x_t)`. Returns (psi, psi').
fn outgoing(x: f64, barrier: f64, field: f64, energy: f64) -> State {
    let c = (2.0 * field).cbrt();
    let u = c * (x - (barrier - energy) / field);
    let z = Complex64::from_polar(u, -std::f64::consts::PI / 3.0);
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let (mut su, mut sv) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    let mut uk = 1.0;
    let mut power = Complex64::new(1.0, 0.0);
    for k in 1..=8 {
        let kf = k as f64;
        uk *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let vk = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk;
        power *= -1.0 / zeta;
        su += uk * power;
        sv += vk * power;
    }
    let e = (-zeta).exp();
    let q = z.sqrt().sqrt();
    let ai = e * su / q;
    let aip = -e * sv * q;
    [ai, aip * c * Complex64::from_polar(1.0, -std::f64::consts::PI / 3.0)]
}

/// Tunneling probability D(k) and reflection coefficient R for the
/// triangular barrier `U - E x` (x > 0), flat potential for x < 0.
pub fn shoot(barrier: f64, field: f64, k: f64, far: f64) -> (f64, Complex64) {
    let energy = 0.5 * k * k;
    let start = outgoing(far, barrier, field, energy);
    let flux = 2.0 * (start[0].conj() * start[1]).im;
    let y = integrate(start, far, 0.0, 1e-12, barrier, field, energy);
    let ik = Complex64::new(0.0, k);
    let incident = (ik * y[0] + y[1]) / (2.0 * ik);
    let reflected = (ik * y[0] - y[1]) / (2.0 * ik);
    let d = flux / (2.0 * k * incident.norm_sqr());
    (d, reflected / incident)
}
